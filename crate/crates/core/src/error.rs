use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord { path: PathBuf, line: usize, reason: String },

    #[error("record `{id}`: unparseable date `{value}`")]
    BadDate { id: String, value: String },

    #[error("duplicate {what} `{key}`")]
    Duplicate { what: &'static str, key: String },

    #[error("invalid argument `{arg}`: {reason}")]
    InvalidArgument { arg: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,

    #[error("word `{0}` is not in the vocabulary")]
    UnknownWord(String),

    #[error("no co-occurrences observed (|D| = 0)")]
    EmptyCounts,

    #[error("no overlapping words with nonzero rows; alignment impossible")]
    EmptyOverlap,

    #[error("degenerate alignment: {0}")]
    DegenerateAlignment(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("instance `{0}`: missing side {1}")]
    MissingSide(String, u8),

    #[error("scoring word `{word}`: {reason}")]
    Scoring { word: String, reason: String },

    #[error("invalid embedding file format: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(arg: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            arg,
            reason: reason.into(),
        }
    }
}
