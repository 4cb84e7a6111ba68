use thiserror::Error;

use crate::io::TensorIoError;

/// Exit code for invalid input or configuration.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit code for a failed equivalence or verification check.
pub const EXIT_VERIFICATION: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => EXIT_VALIDATION,
            CliError::Verification(_) => EXIT_VERIFICATION,
        }
    }

    /// True when stdout was closed early, as in `pasm sweep | head`.
    pub fn is_broken_pipe(&self) -> bool {
        matches!(self, CliError::Io(e) if e.kind() == std::io::ErrorKind::BrokenPipe)
    }

    pub fn field(field: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{field}: {reason}"))
    }
}

impl From<pasm_core::Error> for CliError {
    fn from(e: pasm_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<TensorIoError> for CliError {
    fn from(e: TensorIoError) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
