use thiserror::Error;

use crate::scheme::EvolutionTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The potential (or a kinetic table) produced a non-finite sample.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// An evolution produced non-finite values; `partial` holds everything
    /// computed before the offending step.
    #[error("non-finite values after step {step}")]
    NonFinite {
        step: usize,
        partial: Box<EvolutionTrace>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
