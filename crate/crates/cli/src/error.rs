use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the command-line front end, each with its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("support recovery failed: {0}")]
    Support(smfft_core::Error),
    #[error("value recovery failed: {0}")]
    Values(smfft_core::Error),
    #[error("{0}")]
    OracleGuard(smfft_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{failed} self-test suite(s) failed")]
    SelftestFailed { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config(_) => 2,
            CliError::Support(_) => 3,
            CliError::Values(_) => 4,
            CliError::OracleGuard(_) => 5,
            CliError::Io { .. } | CliError::SelftestFailed { .. } => 1,
        }
    }
}

impl From<smfft_core::Error> for CliError {
    fn from(err: smfft_core::Error) -> Self {
        use smfft_core::Error as E;
        match err {
            E::CandidateBlowup { .. } => CliError::Support(err),
            E::ContractionFailure { .. } => CliError::Values(err),
            E::OracleTooLarge { .. } => CliError::OracleGuard(err),
            other => CliError::Config(other.to_string()),
        }
    }
}
