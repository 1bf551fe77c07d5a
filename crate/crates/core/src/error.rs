use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimation library and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid does not resolve the signal: {0}")]
    Resolution(String),

    #[error("mode {k} needs mode {needed} but the basis is truncated at n_max = {n_max}")]
    Truncation { k: usize, needed: usize, n_max: usize },

    #[error("non-relativistic limit violated: |v/c| = {0:e} (must be < 0.01)")]
    Kinematics(f64),

    #[error("displacement signal is not centered: offset {offset:e} exceeds {tolerance:e}")]
    Centering { offset: f64, tolerance: f64 },

    #[error("homodyne condition violated: {0}")]
    HomodyneCondition(String),

    #[error("covariance factorization failed (condition estimate {condition:e})")]
    Factorization { condition: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::InvalidParameter(_) => 2,
            Error::Io { .. } | Error::Csv { .. } => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
