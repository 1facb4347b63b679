use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the recommendation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("POI {poi} outside domain of size {n}")]
    Domain { poi: usize, n: usize },

    #[error("unknown POI label `{0}` for a fixed domain")]
    UnknownPoi(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("scheduling error: {0}")]
    Scheduling(String),

    #[error("privacy budget exceeded: spent {spent} of {limit}")]
    BudgetExceeded { spent: f64, limit: f64 },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
