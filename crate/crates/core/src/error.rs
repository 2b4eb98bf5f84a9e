use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("row {row}, column {column:?}: {reason}")]
    BadCell {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("row {row}: unknown class label {value:?} (expected \"le\" or \"gt\")")]
    UnknownLabel { row: usize, value: String },

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("duplicate column {0:?}")]
    DuplicateColumn(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value in column {column:?} at row {row}")]
    NonFinite { column: String, row: usize },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid threshold {0} days (expected one of 1, 7, 14, 30, 90)")]
    InvalidThreshold(u32),

    #[error("issue {issue}: closed before it was opened")]
    NegativeLifetime { issue: String },

    #[error("issue {issue}: missing {field}")]
    MissingField { issue: String, field: &'static str },

    #[error("issue {0}: sticky (never closed) issues cannot be labeled")]
    StickyIssue(String),

    #[error("row does not supply feature {0:?}")]
    MissingFeature(String),

    #[error("need at least 2 datasets, got {0}")]
    NotEnoughDatasets(usize),

    #[error("leakage: {0}")]
    Leakage(String),

    #[error("tree text, line {line}: {reason}")]
    TreeParse { line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
