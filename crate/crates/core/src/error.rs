use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The CLI maps each variant to a process exit code via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("data validation failed: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("incompatible units: cannot convert {from} to {to}")]
    IncompatibleUnits { from: String, to: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dipole-forbidden pair: {0}")]
    DipoleForbidden(String),

    #[error("mesh overflow: n = {n} exceeds the configured maximum {n_max}")]
    MeshOverflow { n: u32, n_max: u32 },

    #[error("temperature {0} K outside the supported range [0, 1000] K")]
    TemperatureRange(f64),

    #[error("frequency {omega} a.u. lies within the guard band of resonance {resonance}")]
    ResonanceGuard { omega: f64, resonance: String },

    #[error("no root in bracket [{lo_nm:.3}, {hi_nm:.3}] nm")]
    NoRoot { lo_nm: f64, hi_nm: f64 },

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("non-perturbative field: {0}")]
    NonPerturbative(String),

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Validation(_) | Error::Io { .. } => 3,
            Error::Csv(_) => 3,
            Error::NonConvergence(_) | Error::NoRoot { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
