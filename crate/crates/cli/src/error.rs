use std::path::PathBuf;

use crate::checkpoint::CheckpointError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Inconsistent flags, config or inputs.
    #[error("{0}")]
    Spec(String),

    #[error("{}:{line}: {msg}", path.display())]
    Config { path: PathBuf, line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: CheckpointError,
    },

    #[error(transparent)]
    Core(#[from] eat_core::Error),
}

impl CliError {
    /// 3 for a non-finite loss, 1 for I/O trouble, 2 for everything the user
    /// can fix by changing flags or inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(eat_core::Error::NonFinite(_)) => 3,
            CliError::Core(eat_core::Error::Io { .. }) => 1,
            CliError::Checkpoint {
                source: CheckpointError::Io(_),
                ..
            } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
