use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: file contains no data")]
    EmptyInput(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid cut point: {0}")]
    InvalidCut(String),

    #[error("energy {energy} outside the passive range [{min}, {max}]")]
    EnergyOutOfRange { energy: f64, min: f64, max: f64 },

    #[error("entropy {entropy} outside [0, {max}]")]
    EntropyOutOfRange { entropy: f64, max: f64 },

    #[error("spectrum cannot be expanded into individual levels: {0}")]
    NotDense(String),

    #[error("state is not passive: {0}")]
    NotPassive(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
