//! Error type shared across the library.

use std::path::PathBuf;

/// Errors produced by model construction, inference, training, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller supplied inconsistent or out-of-range arguments.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Every state assigned zero likelihood to the observation at `step`,
    /// so the scaled recursion cannot continue.
    #[error("emission likelihood underflowed to zero at step {step}")]
    Underflow { step: usize },

    /// A network template failed validation.
    #[error("invalid network spec at node {node}: {detail}")]
    SpecValidation { node: String, detail: String },

    /// Filesystem failure, tagged with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A data or model file could not be parsed.
    #[error("parse error in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
