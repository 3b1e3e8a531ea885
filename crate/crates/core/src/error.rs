use crate::trace::ConvergenceTrace;
use crate::Vector;

/// Errors raised by sets, problems, oracles and solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid feasible set: {0}")]
    InvalidSet(String),

    #[error("unsupported oracle order p = {0}")]
    UnsupportedOrder(usize),

    #[error("operator `{0}` does not provide a Jacobian")]
    MissingJacobian(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("strategy `{strategy}` cannot solve this subproblem: {reason}")]
    StrategyMismatch {
        strategy: &'static str,
        reason: String,
    },

    #[error("inner solver exhausted its budget of {iters} iterations (residual {residual:e})")]
    InnerBudget {
        iters: usize,
        residual: f64,
        best: Vector,
    },

    #[error("no bracket for the regularization parameter after {expansions} expansions")]
    Bracket { expansions: usize },

    #[error("operation requires a bounded feasible set")]
    UnboundedSet,

    #[error("restart and local switching require a strongly monotone problem (mu > 0)")]
    NotStronglyMonotone,

    #[error("local switching condition requires p > 1")]
    LocalConditionUnsupported,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("divergence detected at iteration {k} (residual {residual:e})")]
    Divergence {
        k: usize,
        residual: f64,
        trace: Box<ConvergenceTrace>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
