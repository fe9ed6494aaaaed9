use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the audits and their data plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: column `{column}` not found")]
    Schema { column: String },

    #[error("parse error at row {row}, column `{column}`: cannot read `{value}` as a number")]
    Parse { row: usize, column: String, value: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient sample size{}: need at least {required}, got {actual}", group.as_ref().map(|g| format!(" in group `{g}`")).unwrap_or_default())]
    SampleSize {
        group: Option<String>,
        required: usize,
        actual: usize,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("window contains no comparable cells")]
    EmptyWindow,

    #[error("internal error: {0}")]
    Internal(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
