use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the library.
///
/// Every variant maps onto a short, stable category string (see
/// [`Error::category`]) that the command-line front end prints as a prefix.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} supports at most {limit} players, got {got}")]
    Capacity {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("infinite divergence: {0}")]
    InfiniteDivergence(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::Capacity { .. } => "capacity",
            Error::Argument(_) => "argument",
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::Degenerate(_) => "degenerate",
            Error::NonFinite(_) => "non-finite",
            Error::InfiniteDivergence(_) => "divergence",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
