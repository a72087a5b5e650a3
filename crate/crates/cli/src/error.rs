use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::config::ConfigError;

/// Failure of a command, split by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config, missing inputs: exit 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that goes wrong while running: exit 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }

    pub(crate) fn reading(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Usage(format!("cannot read {}: {err}", path.display()))
    }

    pub(crate) fn writing(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Runtime(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("config error: {e}"))
    }
}

impl From<regime_scout::Error> for CliError {
    fn from(e: regime_scout::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
