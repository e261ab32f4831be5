use std::path::PathBuf;

use thiserror::Error;

use crate::model::EventSequence;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Arguments that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema error: missing column `{0}`")]
    Schema(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("rank deficient system: {0}")]
    RankDeficient(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The simulation produced more than `max_events` events; the sequence
    /// generated so far is attached.
    #[error("event cap of {cap} exceeded in sequence `{}`", partial.id())]
    MaxEvents {
        cap: usize,
        partial: Box<EventSequence>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's inputs rather than by a failure
    /// while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidInput(_)
            | Error::Schema(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Format(_)
            | Error::UnsupportedKernel(_)
            | Error::RankDeficient(_) => true,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::Numerical(_) | Error::MaxEvents { .. } => false,
        }
    }
}
