use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical singularity: {0}")]
    NumericalSingularity(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    /// The explicit part of the time step is outside its stability bound.
    #[error("CFL violation at t = {time}: {detail}")]
    CflViolation { time: f64, detail: String },

    /// A non-finite value appeared in the state.
    #[error("simulation diverged at t = {time}")]
    Diverged { time: f64 },

    #[error("bracket error: lower endpoint {lo_verdict}, upper endpoint {hi_verdict}")]
    Bracket {
        lo_verdict: String,
        hi_verdict: String,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
