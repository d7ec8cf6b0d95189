//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed image {path}: {reason}")]
    MalformedImage { path: PathBuf, reason: String },

    #[error("unsupported image: {0}")]
    UnsupportedImage(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance not positive definite")]
    NotPositiveDefinite,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("insufficient samples for component {component}: {got} < {needed}")]
    InsufficientSamples {
        component: usize,
        got: usize,
        needed: usize,
    },

    #[error("malformed annotation: {0}")]
    MalformedAnnotation(String),

    #[error("invalid scene spec: {0}")]
    InvalidSceneSpec(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::MalformedImage {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
