//! Command-line companion to `qndmech-core`: parameter-file parsing,
//! figure reproduction, sweeps, optimisation runs, and CSV/SVG output.

pub mod config;
pub mod csvout;
pub mod figures;
pub mod run;
pub mod svg;

use std::fmt;

/// Errors surfaced to the command line.
#[derive(Debug)]
pub enum CliError {
    /// Parse or validation failure in the config file.
    Config {
        line: Option<usize>,
        message: String,
    },
    /// A figure or command needs keys the config does not provide.
    MissingKeys {
        section: String,
        keys: Vec<String>,
    },
    Io(std::io::Error),
    Core(qndmech_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config {
                line: Some(l),
                message,
            } => {
                write!(f, "config error at line {l}: {message}")
            }
            CliError::Config {
                line: None,
                message,
            } => write!(f, "config error: {message}"),
            CliError::MissingKeys { section, keys } => {
                write!(
                    f,
                    "missing required keys in [{section}]: {}",
                    keys.join(", ")
                )
            }
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<qndmech_core::Error> for CliError {
    fn from(e: qndmech_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Version string stamped into provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Squeezing conversions, amplitude convention: `dB = 20 log10 S`.
pub fn db_to_s(db: f64) -> f64 {
    10.0f64.powf(db / 20.0)
}

pub fn s_to_db(s: f64) -> f64 {
    20.0 * s.log10()
}

/// FNV-1a hash of the raw config bytes, for provenance lines.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
