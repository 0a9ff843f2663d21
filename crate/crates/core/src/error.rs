use thiserror::Error;

use crate::inner::InnerResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An oracle produced NaN or an infinity. Runs abort instead of clamping.
    #[error("oracle returned a non-finite {what} at {point:?}")]
    Oracle { what: &'static str, point: Vec<f64> },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("starting point is infeasible: g(x0) = {0}")]
    InfeasibleStart(f64),

    /// The inner search hit its oracle-call cap. `partial` holds the state at the cap.
    #[error("inner search exceeded its cap of {cap} oracle calls")]
    InnerBudgetExceeded { cap: u64, partial: Box<InnerResult> },

    /// The outer loop ran past its iteration cap, which the outer-iteration
    /// bound rules out for correct metadata.
    #[error("outer loop exceeded its cap of {cap} iterations")]
    OuterBudgetExceeded { cap: usize },

    /// Bisection ran out of steps: the nonconvexity modulus is understated or
    /// the oracle does not match its directional derivatives.
    #[error("bisection found no negative-slope point within {steps} steps")]
    Modulus { steps: usize },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
