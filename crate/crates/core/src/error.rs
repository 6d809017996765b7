use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("line {line}: {message}")]
    Row { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty effective vocabulary")]
    EmptyVocabulary,

    #[error("training set contains a single class ({0})")]
    SingleClass(u8),

    #[error("dimension mismatch at line {line}: expected {expected}, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("word not in embedding store: {0:?}")]
    MissingWord(String),

    #[error("singular normal equations; use ridge_lambda > 0")]
    SingularSystem,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("cannot split: {0}")]
    Split(String),

    #[error("substitution position {position} out of range for {len} tokens")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("unsupported format version {0}")]
    FormatVersion(u32),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the failure is a usage or validation problem (CLI exit 2)
    /// rather than a runtime failure (exit 1).
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::EmptyInput(_) | Error::FormatVersion(_)
        )
    }
}
