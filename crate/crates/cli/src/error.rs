use thiserror::Error;

/// Failure of a CLI command, mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Output(String),
    /// Non-finite values; partial outputs have been written.
    #[error("numeric blow-up: {0}")]
    Numeric(String),
    /// A study ran but one of its checks failed; outputs have been written.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Check(_) => 1,
        }
    }
}

impl From<laxol::Error> for CliError {
    fn from(e: laxol::Error) -> Self {
        match e {
            laxol::Error::InvalidInput(m) => CliError::Config(m),
            laxol::Error::Evaluation(m) => CliError::Numeric(m),
            e @ laxol::Error::NonFinite { .. } => CliError::Numeric(e.to_string()),
        }
    }
}
