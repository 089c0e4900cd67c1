pub mod commands;
pub mod config;

use ddfem::study::StudyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl CliError {
    /// 1 for bad input, 2 for failures of the numerics.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) | CliError::VerificationFailed(_) => 2,
        }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}
