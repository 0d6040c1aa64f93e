use qbessel_core::QError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Numeric(#[from] QError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Numeric(QError::NonConvergence { .. }) => 3,
            CliError::Numeric(QError::DivisionByZero(_)) => 3,
            CliError::Numeric(_) | CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
