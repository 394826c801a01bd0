use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the explanation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file (ragged rows, empty file, missing cells).
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    /// An operation was called with inputs that break its contract
    /// (dimension mismatch, k larger than the dataset, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A search request that cannot be honoured (origin already in the
    /// target cluster, NOISE as target, ...).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Bad command-line or config input.
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
