use std::io;
use std::path::Path;

use burstline_core::burst::BurstError;
use burstline_core::perfmodel::ModelError;
use burstline_core::sim::SimError;

/// Exit statuses shared by every subcommand.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 2;
    pub const DATA: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
    pub const DEADLINE_MISSED: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input.
    #[error("{0}")]
    Parse(String),
    /// Well-formed input that cannot be used.
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io { .. } => exit::PARSE,
            CliError::Data(_) => exit::DATA,
            CliError::Infeasible(_) => exit::INFEASIBLE,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            context: path.display().to_string(),
            source,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BurstError> for CliError {
    fn from(e: BurstError) -> Self {
        match e {
            BurstError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Burst(b) => b.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}
