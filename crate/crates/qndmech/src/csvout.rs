//! CSV emission with a one-line `#` provenance header. Output is
//! byte-stable for identical config and seed: no timestamps, fixed float
//! formatting, deterministic row order.

use std::io::Write;
use std::path::Path;

use crate::{CliResult, VERSION};

pub struct CsvWriter {
    buf: Vec<u8>,
}

impl CsvWriter {
    /// Start a table with the provenance line and the header row.
    pub fn new(command: &str, config_hash: u64, header: &[&str]) -> Self {
        let mut buf = Vec::new();
        let _ = writeln!(
            buf,
            "# qndmech {VERSION} | command: {command} | config: fnv64:{config_hash:016x}"
        );
        let mut w = Self { buf };
        w.row_str(header);
        w
    }

    pub fn row_str(&mut self, fields: &[&str]) {
        let line: Vec<String> = fields.iter().map(|f| quote(f)).collect();
        let _ = writeln!(self.buf, "{}", line.join(","));
    }

    /// A row of numbers after a leading tag column.
    pub fn row_tagged(&mut self, tag: &str, values: &[f64]) {
        let mut fields = vec![quote(tag)];
        fields.extend(values.iter().map(|v| format_f64(*v)));
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn row_numbers(&mut self, values: &[f64]) {
        let fields: Vec<String> = values.iter().map(|v| format_f64(*v)).collect();
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    /// Numbers followed by a trailing tag column.
    pub fn row_numbers_tagged(&mut self, values: &[f64], tag: &str) {
        let mut fields: Vec<String> = values.iter().map(|v| format_f64(*v)).collect();
        fields.push(quote(tag));
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn write_to(&self, path: &Path) -> CliResult<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, &self.buf)?;
        Ok(())
    }
}

pub fn format_f64(v: f64) -> String {
    if v == v.floor() && v.abs() < 1e15 && v.abs() >= 1e-3 || v == 0.0 {
        // short form for exact integers keeps the tables readable
        format!("{v}")
    } else {
        format!("{v:.12e}")
    }
}

fn quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
