use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A numerical kernel failed (non-convergence, non-finite values).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A dataset file does not follow its binary layout.
    #[error("{path}: malformed file at byte offset {offset}: {reason}")]
    Format {
        path: String,
        offset: u64,
        reason: String,
    },

    /// A run configuration key has an invalid value.
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A single `(m, trial)` job of a sweep failed.
    #[error("width m = {m}, trial {trial}: {source}")]
    Trial {
        m: usize,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
