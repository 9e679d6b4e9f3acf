use std::fmt;

use ftg_core::FtgError;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// A failure together with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<FtgError> for CliError {
    fn from(e: FtgError) -> Self {
        let code = match e {
            FtgError::Domain(_) | FtgError::InvalidParams(_) => EXIT_USAGE,
            FtgError::Parse { .. } | FtgError::DegenerateSample(_) => EXIT_DATA,
            FtgError::NonConvergence { .. } | FtgError::SamplerStalled { .. } | FtgError::ReplicateFailures { .. } => {
                EXIT_NUMERICAL
            }
        };
        Self { code, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
