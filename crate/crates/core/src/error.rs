use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Fock truncation too coarse: tail bound {tail_bound:.3e} exceeds {limit:.1e} at cutoff {cutoff}")]
    Truncation {
        cutoff: usize,
        tail_bound: f64,
        limit: f64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
