use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("column count mismatch: model has {expected} columns, row has {found}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("class {class} has only {count} instance(s); at least {needed} required")]
    ClassTooSmall {
        class: String,
        count: usize,
        needed: usize,
    },
    #[error("predictor protocol error: {0}")]
    Protocol(String),
    #[error("predictor returned an invalid probability matrix: {0}")]
    InvalidProbabilities(String),
    #[error("predictor request timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("experiment store error: {0}")]
    Store(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
