//! Pipeline layer around `tailwait-core`: config files, CSV formats, and the
//! five subcommands (`simulate`, `waits`, `fit`, `gamma`, `simstudy`).
//!
//! One master seed in the config pins every derived seed, so reruns are
//! byte-identical. All CSVs use `.` decimals, `,` separators, and LF line
//! endings; each stage writes a JSON-lines metadata sidecar embedding the
//! config hash and library version.

pub mod commands;
pub mod config;
pub mod io;

/// Pipeline error with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 2: unusable configuration or arguments.
    #[error("config error: {0}")]
    Config(String),
    /// Exit code 3: missing, malformed, or insufficient data.
    #[error("data error: {0}")]
    Data(String),
    /// Exit code 4: a computation degenerated numerically.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<tailwait_core::Error> for CliError {
    fn from(e: tailwait_core::Error) -> Self {
        match e {
            tailwait_core::Error::InvalidInput(m) => CliError::Config(m),
            tailwait_core::Error::InsufficientData(m) => CliError::Data(m),
            tailwait_core::Error::Numerical(m) => CliError::Numerical(m),
        }
    }
}

/// IO failures are data errors with the path attached.
pub fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Shortest round-trip decimal for CSV cells, switching to exponent notation
/// outside a sane magnitude window so tiny kernel values do not explode into
/// hundreds of digits.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs();
    if (1e-4..1e16).contains(&magnitude) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
