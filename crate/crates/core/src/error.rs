use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ClareError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ClareError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Format(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("autoencoder diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("K={k}, fold {fold}: {source}")]
    Fit {
        k: usize,
        fold: usize,
        #[source]
        source: Box<ClareError>,
    },
}

impl ClareError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ClareError::Io {
            path: path.into(),
            source,
        }
    }
}
