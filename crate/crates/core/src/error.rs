use thiserror::Error;

use crate::model::ActionId;

/// Errors raised by model access, policy handling and instance IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("action {action:?} out of range: model has {action_count} actions")]
    InvalidAction { action: ActionId, action_count: usize },

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid controller: {0}")]
    InvalidFsc(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("JSON parse error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Json {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
