use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or model parameter lies outside its domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// An operation was invoked in a way its contract forbids.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: index {index} out of bounds for mode {mode} of size {size}")]
    Bounds {
        path: PathBuf,
        line: usize,
        mode: usize,
        index: u64,
        size: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A positive count must be allocated across components that all have zero rate.
    #[error("model inconsistency: {0}")]
    Inconsistent(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A computed rate or draw left the representable range.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("non-finite value in {what} (chain {chain}, iteration {iteration})")]
    NonFinite {
        what: String,
        chain: usize,
        iteration: usize,
        dump: Option<Box<serde_json::Value>>,
    },

    /// A run stopped early on request; its checkpoints can be resumed.
    #[error("interrupted: {0}")]
    Interrupted(String),

    #[error("held-out set mismatch: {0}")]
    HoldoutMismatch(String),

    #[error("empty held-out set: {0}")]
    EmptyHoldout(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed archive {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
