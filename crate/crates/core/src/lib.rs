//! Solvers for monotone variational inequalities built around the
//! approximation-based regularized extra-gradient (ARE) update.
//!
//! The crate is organized bottom-up:
//!
//! * [`sets`]: feasible sets with exact projections;
//! * [`problem`] and [`oracle`]: VI problems and the approximation oracles
//!   `F~(x; y)` used to build subproblems;
//! * [`subproblem`]: solvers for the regularized subproblem;
//! * [`are`]: the ARE update, restart epochs and local switching;
//! * [`first_order`]: projection, extra-gradient and OGDA baselines;
//! * [`metrics`] and [`trace`]: residuals, merit estimates, rate fits;
//! * [`problems`]: built-in instances.
//!
//! ```
//! use are_vi::{are, oracle, problems, FeasibleSet, Matrix, Vector};
//!
//! let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
//! let b = Vector::from_column_slice(&[1.0, -1.0]);
//! let problem = problems::affine("demo", a, b, FeasibleSet::whole_space(2))?
//!     .with_constants(2f64.sqrt(), 1.0, 1.0)?;
//! let taylor = oracle::taylor_oracle(&problem, 2)?;
//! let config = are::AREConfig { tol_residual: 1e-12, ..are::AREConfig::new(2) };
//! let trace = are::run_algorithm1(&problem, &taylor, &config, &Vector::zeros(2))?;
//! assert!(trace.converged);
//! # Ok::<(), are_vi::Error>(())
//! ```

pub mod are;
pub mod error;
pub mod first_order;
pub mod metrics;
pub mod oracle;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod sets;
pub mod subproblem;
pub mod trace;

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

pub use are::AREConfig;
pub use error::{Error, Result};
pub use first_order::{FirstOrderConfig, FirstOrderMethod};
pub use oracle::ApproximationOracle;
pub use problem::{CompositeProblem, VIProblem};
pub use rng::Sampler;
pub use sets::{FeasibleSet, SetKind};
pub use subproblem::{LambdaSolve, Strategy, SubproblemInstance};
pub use trace::{ConvergenceTrace, StepKind, TraceRecord};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/sets.md")]
    pub struct Sets;
    #[doc = include_str!("../../../book/src/problems.md")]
    pub struct Problems;
    #[doc = include_str!("../../../book/src/subproblems.md")]
    pub struct Subproblems;
    #[doc = include_str!("../../../book/src/are.md")]
    pub struct Are;
    #[doc = include_str!("../../../book/src/baselines.md")]
    pub struct Baselines;
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub struct Metrics;
}
