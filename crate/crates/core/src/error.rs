use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("value {value} outside table range [{lo}, {hi}] for {axis}")]
    OutOfRange {
        axis: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("kernel integration failed at beta = {beta}: {reason}")]
    Integration { beta: f64, reason: String },

    #[error("power iteration did not converge after {iterations} iterations (last Rayleigh quotient {rayleigh:e})")]
    NoConvergence { iterations: usize, rayleigh: f64 },

    #[error("kernel table check failed: {0}")]
    TableCheck(String),

    #[error("negative kernel sum {0:e} (broken table?)")]
    NegativeKernelSum(f64),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
