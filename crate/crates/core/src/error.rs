use std::path::PathBuf;

/// Errors raised by data handling, model fitting and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate target: y has zero variance")]
    DegenerateTarget,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },

    #[error("row {row}: violates {rule}")]
    Validation { row: usize, rule: String },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("dataset has no target column")]
    MissingTarget,

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("degenerate sample weights: {0}")]
    DegenerateWeights(String),

    #[error("fold {fold} failed")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model format: {0}")]
    Format(String),

    #[error("cannot access {}", path.display())]
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

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }
}
