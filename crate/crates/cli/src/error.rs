use std::path::PathBuf;

use seizure_core::Error as CoreError;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const INSUFFICIENT_SEIZURES: i32 = 4;
    pub const VERIFICATION: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("no crossval outputs in run directory {0}")]
    MissingRun(PathBuf),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::MissingRun(_) => exit::DATA,
            CliError::Verification(_) => exit::VERIFICATION,
            CliError::Io { .. } => exit::IO,
            CliError::Core(e) => match e.root() {
                CoreError::InsufficientSeizures { .. } => exit::INSUFFICIENT_SEIZURES,
                CoreError::InvalidConfig(_) | CoreError::InvalidSpec(_) => exit::CONFIG,
                CoreError::Io(_) => exit::IO,
                _ => exit::DATA,
            },
        }
    }
}
