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

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: row {row}: {message}")]
    BadRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: line {line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("record {id}: {message}")]
    Linearize { id: String, message: String },

    #[error("insufficient population in stratum `{stratum}`: need {needed}, have {available} (short by {})", needed - available)]
    InsufficientStratum {
        stratum: String,
        needed: usize,
        available: usize,
    },

    #[error("invalid sizes: {0}")]
    InvalidSizes(String),

    #[error("length mismatch: {left} predictions vs {right} golds")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("missing cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("generator failed: {0}")]
    Generator(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
