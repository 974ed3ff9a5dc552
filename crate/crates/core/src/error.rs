use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("confidence {0} is outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("invalid trial {item_id}: {reason}")]
    InvalidTrial { item_id: String, reason: String },
    #[error("cell mixes trials from {expected} and {found}")]
    MixedCell { expected: String, found: String },
    #[error("cell counts do not match its trials: {0}")]
    CellCountMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("failed to open {path}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("schema violation in header: {0}")]
    Header(String),
    #[error("{bad} of {total} lines invalid (limit 1%); first: line {first_line}: {first_message}")]
    TooManyBadLines {
        bad: usize,
        total: usize,
        first_line: usize,
        first_message: String,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
