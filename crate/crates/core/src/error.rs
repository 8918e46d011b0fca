use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the market, agent and statistics layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("interval of zero length ({start}..{end})")]
    EmptyInterval { start: usize, end: usize },
    #[error("insufficient data: need {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Errors raised while training or loading a policy.
#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("non-finite {which} loss at update {update} (agent {agent_id}): {diagnostics}")]
    NonFiniteLoss {
        which: &'static str,
        update: u64,
        agent_id: usize,
        diagnostics: String,
    },
    #[error("rollout buffer is empty")]
    EmptyBuffer,
    #[error("invalid hidden layer index {0}; expected 1 or 2")]
    InvalidLayer(usize),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Errors surfaced by configuration loading and the command layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("config validation: `{key}` {reason}")]
    Validation { key: String, reason: String },
    #[error("{path}: row {row}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    CsvWrite(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
