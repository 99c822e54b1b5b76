//! Error types shared across the engine.

use std::path::PathBuf;
use std::time::Duration;

/// Errors raised by chat/embedding backends. Transport-level failures are
/// retriable; protocol-level failures are not.
#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("bad response: {0}")]
    BadResponse(String),
    #[error("backend returned an empty completion")]
    EmptyCompletion,
    #[error("missing configuration: {0}")]
    Misconfigured(String),
}

impl BackendError {
    /// Whether a retry with backoff is worthwhile.
    pub fn is_retriable(&self) -> bool {
        matches!(self, BackendError::Transport(_) | BackendError::Timeout(_))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at {path}:{line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("dangling reference: {0}")]
    DanglingRef(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("insufficient pool: need {need}, have {have} ({context})")]
    InsufficientPool {
        need: usize,
        have: usize,
        context: String,
    },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
