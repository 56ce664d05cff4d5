use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Location of a configuration problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub line: Option<usize>,
    pub field: Option<String>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}, field `{k}`"),
            (Some(l), None) => write!(f, "line {l}"),
            (None, Some(k)) => write!(f, "field `{k}`"),
            (None, None) => write!(f, "config"),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{at}: {message}")]
    Config { at: Location, message: String },

    #[error("refusing to overwrite {0} (pass --force)")]
    Overwrite(PathBuf),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] relaylab::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn config(line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            at: Location {
                line,
                field: field.map(str::to_owned),
            },
            message: message.into(),
        }
    }

    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Core(relaylab::Error::ExponentOutOfRange { .. })
            | HarnessError::Core(relaylab::Error::InvalidParameter { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
