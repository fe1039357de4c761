use std::fmt;
use std::process::ExitCode;

use tpa_core::TpaError;

/// Usage errors exit with 2, everything else with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(anyhow::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failure(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<TpaError> for CliError {
    fn from(e: TpaError) -> Self {
        CliError::Failure(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failure(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.into())
    }
}

pub trait UsageContext<T> {
    /// Reclassifies an error as a usage error.
    fn or_usage(self) -> CliResult<T>;
}

impl<T, E: fmt::Display> UsageContext<T> for Result<T, E> {
    fn or_usage(self) -> CliResult<T> {
        self.map_err(|e| CliError::Usage(e.to_string()))
    }
}
