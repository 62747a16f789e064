//! Error type shared across the crate.

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A wavelength fell outside the declared validity range of a coefficient set.
    #[error("wavelength {wavelength_um} um outside validity range [{min_um}, {max_um}] um for {material} ({polarization})")]
    WavelengthRange {
        material: String,
        polarization: &'static str,
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    /// A numeric argument violated a mathematical precondition.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Root bracketing failed: no solution in the searched interval.
    #[error("no solution for {op} in ({lo}, {hi}): {msg}")]
    NoSolution {
        op: &'static str,
        lo: f64,
        hi: f64,
        msg: String,
    },

    /// Malformed record or file contents.
    #[error("format error{}: {msg}", line.map(|n| format!(" at line {n}")).unwrap_or_default())]
    Format { line: Option<usize>, msg: String },

    /// A field inside a fixed-width record failed to parse.
    #[error("field error in columns {col_start}-{col_end} ({name}): {msg}")]
    Field {
        name: &'static str,
        col_start: usize,
        col_end: usize,
        msg: String,
    },

    /// A tabular input did not match its declared schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// Invalid configuration caught before any simulation work starts.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid analysis parameter (window sizes, polynomial orders, thresholds).
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("unknown material '{0}'")]
    UnknownMaterial(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::Field { .. }
                | Error::Schema(_)
                | Error::Config(_)
                | Error::Parameter(_)
                | Error::UnknownMaterial(_)
                | Error::UnknownPreset(_)
        )
    }
}
