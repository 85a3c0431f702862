use std::path::Path;

use thiserror::Error;
use wifitrace::ingest::{IngestError, StoreError};
use wifitrace::model::ConfigError;
use wifitrace::synth::SynthError;

/// Failure of a command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// The inputs were readable but the request cannot be answered.
    #[error("{0}")]
    Domain(String),
    /// Unreadable, unwritable or malformed input or output.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownUser(_) | StoreError::InvalidUser(_) => CliError::Domain(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::CorruptStream(_) => CliError::Io(format!("CorruptStream: {e}")),
            IngestError::SchemaViolation(_) => CliError::Io(format!("SchemaViolation: {e}")),
            IngestError::Store(s) => s.into(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}
