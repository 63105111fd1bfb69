use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed inconsistent or out-of-domain arguments.
    #[error("usage error: {0}")]
    Usage(String),

    /// Cholesky factorization failed even at the maximum jitter.
    #[error("numerical failure at {hyper}: {message}")]
    Numerical { hyper: String, message: String },

    /// Every optimizer restart failed.
    #[error("training failed after {} restarts: {}", diagnostics.len(), diagnostics.join("; "))]
    TrainingFailed { diagnostics: Vec<String> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A file could be read but its contents are invalid.
    #[error("{path}: {location}: {message}")]
    Load {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn load(
        path: impl Into<PathBuf>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Load {
            path: path.into(),
            location: location.into(),
            message: message.into(),
        }
    }
}
