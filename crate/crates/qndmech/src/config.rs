//! Sectioned key=value parameter files.
//!
//! ```text
//! # comment
//! [hardware]
//! kappa_over_2pi_hz = 221.5e6
//! tau_us = 4.5
//! ```
//!
//! Unknown sections or keys are rejected with their line number, so a
//! typo cannot silently fall back to a default. Units at this boundary
//! follow the lab convention: `kappa/2pi` and `gamma/2pi` in Hz, `tau` in
//! microseconds, squeezing in dB; everything becomes angular SI once
//! parsed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use qndmech_core::protocol::{BathMode, ModelKind, ProtocolParams};

use crate::{db_to_s, CliError, CliResult};

const KNOWN: &[(&str, &[&str])] = &[
    (
        "hardware",
        &[
            "kappa_over_2pi_hz",
            "gamma_over_2pi_hz",
            "omega_m_over_2pi_hz",
            "tau_us",
        ],
    ),
    (
        "protocol",
        &["k1", "k2", "k_f", "squeezing_db", "eta", "n_th"],
    ),
    ("model", &["kind", "bath"]),
    ("sweep", &["squeezing_db", "k1", "k2", "k_f", "tau_us"]),
    (
        "optimize",
        &[
            "g_max_over_kappa",
            "g_max_ladder",
            "kappa_tau_min",
            "kappa_tau_max",
            "squeezing_db_max",
            "n_seeds",
            "n_refine",
        ],
    ),
    (
        "figure",
        &[
            "squeezing_db_points",
            "squeezing_db_max",
            "electromechanical",
            "g_points",
        ],
    ),
    (
        "electromechanical",
        &[
            "kappa_over_2pi_hz",
            "gamma_over_2pi_hz",
            "omega_m_over_2pi_hz",
            "n_th",
            "eta",
        ],
    ),
];

/// Raw parsed file: `section -> key -> (value, line)`.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
    /// FNV-1a hash of the raw bytes, stamped into provenance headers.
    pub hash: u64,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, (String, usize)>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim().to_ascii_lowercase();
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(CliError::Config {
                        line: Some(line_no),
                        message: format!("unknown section [{name}]"),
                    });
                }
                current = Some(name.clone());
                sections.entry(name).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config {
                    line: Some(line_no),
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let Some(section) = current.clone() else {
                return Err(CliError::Config {
                    line: Some(line_no),
                    message: "key outside of any [section]".into(),
                });
            };
            let key = key.trim().to_ascii_lowercase();
            let allowed = KNOWN
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, k)| *k)
                .unwrap();
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Config {
                    line: Some(line_no),
                    message: format!("unknown key `{key}` in [{section}]"),
                });
            }
            sections
                .get_mut(&section)
                .unwrap()
                .insert(key, (value.trim().to_string(), line_no));
        }
        Ok(Self {
            sections,
            hash: crate::fnv1a(text.as_bytes()),
        })
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn raw(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn f64_opt(&self, section: &str, key: &str) -> CliResult<Option<f64>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<f64>().map(Some).map_err(|_| CliError::Config {
                line: Some(*line),
                message: format!("`{section}.{key}` is not a number: `{v}`"),
            }),
        }
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.f64_opt(section, key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> CliResult<usize> {
        match self.raw(section, key) {
            None => Ok(default),
            Some((v, line)) => v.parse::<usize>().map_err(|_| CliError::Config {
                line: Some(*line),
                message: format!("`{section}.{key}` is not an integer: `{v}`"),
            }),
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> CliResult<bool> {
        match self.raw(section, key) {
            None => Ok(default),
            Some((v, line)) => match v.to_ascii_lowercase().as_str() {
                "on" | "true" | "yes" | "1" => Ok(true),
                "off" | "false" | "no" | "0" => Ok(false),
                other => Err(CliError::Config {
                    line: Some(*line),
                    message: format!("`{section}.{key}` is not a switch: `{other}`"),
                }),
            },
        }
    }

    pub fn string_opt(&self, section: &str, key: &str) -> Option<&str> {
        self.raw(section, key).map(|(v, _)| v.as_str())
    }

    /// Comma list or `lo:step:hi` range of numbers.
    pub fn list_opt(&self, section: &str, key: &str) -> CliResult<Option<Vec<f64>>> {
        let Some((v, line)) = self.raw(section, key) else {
            return Ok(None);
        };
        parse_list(v).map(Some).map_err(|message| CliError::Config {
            line: Some(*line),
            message,
        })
    }

    /// The hardware + protocol parameter block, with the reported
    /// optomechanical hardware as the built-in default.
    pub fn protocol_params(&self) -> CliResult<ProtocolParams> {
        let kappa = 2.0 * PI * self.f64_or("hardware", "kappa_over_2pi_hz", 221.5e6)?;
        let gamma = 2.0 * PI * self.f64_or("hardware", "gamma_over_2pi_hz", 328.0)?;
        let omega_m = 2.0 * PI * self.f64_or("hardware", "omega_m_over_2pi_hz", 0.0)?;
        let tau = 1e-6 * self.f64_or("hardware", "tau_us", 4.5)?;
        if !(tau > 0.0) {
            return Err(self.key_error("hardware", "tau_us", "must be positive"));
        }
        let k1 = self.f64_or("protocol", "k1", 1.0)?;
        let k2 = self.f64_or("protocol", "k2", 8.0)?;
        let eta = self.f64_or("protocol", "eta", 1.0)?;
        let n_th = self.f64_or("protocol", "n_th", 0.0)?;
        let squeezing = db_to_s(self.f64_or("protocol", "squeezing_db", 0.0)?);

        let mut p = ProtocolParams::from_gains(kappa, tau, k1, k2);
        p.gamma = gamma;
        p.omega_m = omega_m;
        p.eta = eta;
        p.n_th = n_th;
        p.squeezing = squeezing;
        p.k_f = match self.string_opt("protocol", "k_f") {
            None => p.cancellation_k_f(),
            Some(v) if v.eq_ignore_ascii_case("cancel") => p.cancellation_k_f(),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| self.key_error("protocol", "k_f", "expected a number or `cancel`"))?,
        };
        p.validate().map_err(|e| CliError::Config {
            line: None,
            message: format!("invalid parameters: {e}"),
        })?;
        Ok(p)
    }

    pub fn model_kind(&self) -> CliResult<ModelKind> {
        match self.string_opt("model", "kind").unwrap_or("adiabatic") {
            s if s.eq_ignore_ascii_case("adiabatic") => Ok(ModelKind::AdiabaticIdeal),
            s if s.eq_ignore_ascii_case("full-cavity") => Ok(ModelKind::FullCavity),
            s if s.eq_ignore_ascii_case("non-rwa") => Ok(ModelKind::NonRwa),
            other => Err(CliError::Config {
                line: None,
                message: format!(
                    "model.kind must be adiabatic, full-cavity or non-rwa, got `{other}`"
                ),
            }),
        }
    }

    pub fn bath_mode(&self) -> CliResult<BathMode> {
        match self.string_opt("model", "bath").unwrap_or("off") {
            s if s.eq_ignore_ascii_case("off") => Ok(BathMode::Off),
            s if s.eq_ignore_ascii_case("on") | s.eq_ignore_ascii_case("exact") => {
                Ok(BathMode::ExactExponential)
            }
            s if s.eq_ignore_ascii_case("linear") => Ok(BathMode::LinearGamma),
            other => Err(CliError::Config {
                line: None,
                message: format!("model.bath must be off, on, exact or linear, got `{other}`"),
            }),
        }
    }

    fn key_error(&self, section: &str, key: &str, message: &str) -> CliError {
        let line = self.raw(section, key).map(|(_, l)| *l);
        CliError::Config {
            line,
            message: format!("`{section}.{key}` {message}"),
        }
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if let Some((lo, rest)) = text.split_once(':') {
        let (step, hi) = rest
            .split_once(':')
            .ok_or_else(|| format!("range must be lo:step:hi, got `{text}`"))?;
        let (lo, step, hi) = (
            lo.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad range start `{lo}`"))?,
            step.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad range step `{step}`"))?,
            hi.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad range end `{hi}`"))?,
        );
        if !(step > 0.0) || hi < lo {
            return Err(format!("empty or descending range `{text}`"));
        }
        let mut out = Vec::new();
        let n = ((hi - lo) / step).round() as usize;
        for i in 0..=n {
            let v = lo + step * i as f64;
            if v <= hi + 1e-9 * step {
                out.push(v);
            }
        }
        return Ok(out);
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{s}`"))
        })
        .collect()
}
