//! Projection, extra-gradient and optimistic (OGDA) baselines.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::metrics::natural_residual_with;
use crate::problem::VIProblem;
use crate::trace::{ConvergenceTrace, Stopwatch, StepKind, TraceRecord};
use crate::Vector;

/// Residual above which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FirstOrderMethod {
    Projection,
    Extragradient,
    Ogda,
}

impl FirstOrderMethod {
    pub fn name(self) -> &'static str {
        match self {
            FirstOrderMethod::Projection => "projection",
            FirstOrderMethod::Extragradient => "extragradient",
            FirstOrderMethod::Ogda => "ogda",
        }
    }
}

impl fmt::Display for FirstOrderMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FirstOrderMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projection" => Ok(FirstOrderMethod::Projection),
            "extragradient" | "eg" => Ok(FirstOrderMethod::Extragradient),
            "ogda" => Ok(FirstOrderMethod::Ogda),
            _ => Err(Error::Config(format!("unknown first-order method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderConfig {
    pub method: FirstOrderMethod,
    /// Inverse step size: steps move by `F / step_gamma`.
    pub step_gamma: f64,
    pub ogda_alpha: f64,
    pub ogda_eta: f64,
    pub max_iters: usize,
    pub tol_residual: f64,
    /// Keep iterates in the trace records.
    pub store_iterates: bool,
}

impl FirstOrderConfig {
    /// `step_gamma = 2 l1` and `alpha = eta = 1 / (4 l1)`.
    pub fn defaults(method: FirstOrderMethod, l1: f64) -> Result<Self> {
        if !(l1 > 0.0) {
            return Err(Error::Config("default step sizes need a positive l1".into()));
        }
        Ok(Self {
            method,
            step_gamma: 2.0 * l1,
            ogda_alpha: 0.25 / l1,
            ogda_eta: 0.25 / l1,
            max_iters: 10_000,
            tol_residual: 1e-8,
            store_iterates: true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let steps = [self.step_gamma, self.ogda_alpha, self.ogda_eta];
        if steps.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::Config(format!("step parameters must be positive: {steps:?}")));
        }
        if !(self.tol_residual >= 0.0) {
            return Err(Error::Config("tol_residual must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `P_X(x_k - F(x_k) / gamma)`.
pub fn projection_step(problem: &VIProblem, x_k: &Vector, gamma: f64) -> Result<Vector> {
    let fx = problem.eval_operator(x_k)?;
    Ok(project_step(problem, x_k, &fx, 1.0 / gamma))
}

/// `(x_half, x_next)` with `x_half = P_X(x_k - F(x_k)/gamma)` and
/// `x_next = P_X(x_k - F(x_half)/gamma)`.
pub fn extragradient_step(problem: &VIProblem, x_k: &Vector, gamma: f64) -> Result<(Vector, Vector)> {
    let fx = problem.eval_operator(x_k)?;
    let x_half = project_step(problem, x_k, &fx, 1.0 / gamma);
    let x_next = project_step(problem, x_k, &problem.eval(&x_half), 1.0 / gamma);
    Ok((x_half, x_next))
}

/// `P_X(x_k - alpha F(x_k) - eta (F(x_k) - F_prev))`. Seed `f_prev = F(x_k)` on the first call.
pub fn ogda_step(problem: &VIProblem, x_k: &Vector, f_prev: &Vector, alpha: f64, eta: f64) -> Result<Vector> {
    check_dim(problem.dim(), f_prev.len())?;
    let fx = problem.eval_operator(x_k)?;
    Ok(ogda_from(problem, x_k, &fx, f_prev, alpha, eta))
}

fn project_step(problem: &VIProblem, x: &Vector, direction: &Vector, step: f64) -> Vector {
    let mut z = x - direction * step;
    problem.set().project_mut(&mut z);
    z
}

fn ogda_from(problem: &VIProblem, x: &Vector, fx: &Vector, f_prev: &Vector, alpha: f64, eta: f64) -> Vector {
    let mut z = x - fx * (alpha + eta) + f_prev * eta;
    problem.set().project_mut(&mut z);
    z
}

/// Run a baseline until the natural residual drops to `tol_residual` or the budget runs out.
pub fn run_first_order(problem: &VIProblem, config: &FirstOrderConfig, x_init: &Vector) -> Result<ConvergenceTrace> {
    config.validate()?;
    check_dim(problem.dim(), x_init.len())?;
    let set = problem.set();
    if !set.contains(x_init, 1e-12 * (1.0 + x_init.norm())) {
        return Err(Error::Config("initial point is not feasible".into()));
    }
    let clock = Stopwatch::start();
    let mut x = x_init.clone();
    let mut fx = problem.eval(&x);
    let mut f_prev = fx.clone();
    let init_res = natural_residual_with(problem, &x, &fx);
    let mut trace = ConvergenceTrace::new(config.method.name(), x_init, init_res);
    if init_res <= config.tol_residual {
        trace.converged = true;
        return Ok(trace);
    }
    let keep = config.store_iterates;
    for k in 1..=config.max_iters {
        let (x_half, x_next) = match config.method {
            FirstOrderMethod::Projection => (None, project_step(problem, &x, &fx, 1.0 / config.step_gamma)),
            FirstOrderMethod::Extragradient => {
                let half = project_step(problem, &x, &fx, 1.0 / config.step_gamma);
                let next = project_step(problem, &x, &problem.eval(&half), 1.0 / config.step_gamma);
                (Some(half), next)
            }
            FirstOrderMethod::Ogda => (
                None,
                ogda_from(problem, &x, &fx, &f_prev, config.ogda_alpha, config.ogda_eta),
            ),
        };
        let f_next = problem.eval(&x_next);
        let residual = natural_residual_with(problem, &x_next, &f_next);
        let step_norm = (x_half.as_ref().unwrap_or(&x_next) - &x).norm();
        let gamma_k = match config.method {
            FirstOrderMethod::Ogda => 1.0 / config.ogda_alpha,
            _ => config.step_gamma,
        };
        trace.records.push(TraceRecord {
            k,
            epoch: 1,
            x: keep.then(|| x.clone()),
            x_half: if keep { x_half } else { None },
            x_next: keep.then(|| x_next.clone()),
            step_norm,
            gamma_k,
            step_kind: StepKind::FirstOrder,
            residual,
            inner_iters: 0,
            inner_residual: 0.0,
            wall_ns: clock.elapsed_ns(),
        });
        f_prev = std::mem::replace(&mut fx, f_next);
        x = x_next;
        if !residual.is_finite() || residual > DIVERGENCE_THRESHOLD {
            trace.final_iterate = x;
            return Err(Error::Divergence {
                k,
                residual,
                trace: Box::new(trace),
            });
        }
        if residual <= config.tol_residual {
            trace.converged = true;
            break;
        }
    }
    trace.final_iterate = x;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::AffineOperator;
    use crate::sets::FeasibleSet;
    use crate::Matrix;
    use std::sync::Arc;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn affine(a: Matrix, b: Vector) -> VIProblem {
        let n = b.len();
        VIProblem::new("affine", Arc::new(AffineOperator::new(a, b).unwrap()), FeasibleSet::whole_space(n)).unwrap()
    }

    fn rotation() -> VIProblem {
        affine(Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]), Vector::zeros(2))
            .with_constants(1.0, 0.0, 0.0)
            .unwrap()
    }

    #[test]
    fn step_examples() {
        let id = affine(Matrix::identity(1, 1), Vector::zeros(1));
        assert_eq!(projection_step(&id, &v(&[1.0]), 1.0).unwrap(), v(&[0.0]));
        let (h, n) = extragradient_step(&id, &v(&[1.0]), 2.0).unwrap();
        assert!((h[0] - 0.5).abs() < 1e-15 && (n[0] - 0.75).abs() < 1e-15);

        let zero = affine(Matrix::zeros(2, 2), Vector::zeros(2));
        let x = v(&[0.3, -0.2]);
        assert_eq!(projection_step(&zero, &x, 1.0).unwrap(), x);
        assert_eq!(extragradient_step(&zero, &x, 1.0).unwrap(), (x.clone(), x.clone()));
        assert_eq!(ogda_step(&zero, &x, &Vector::zeros(2), 0.1, 0.1).unwrap(), x);

        let rot = rotation();
        assert_eq!(projection_step(&rot, &v(&[1.0, 0.0]), 1.0).unwrap(), v(&[1.0, 1.0]));
        let (_, next) = extragradient_step(&rot, &v(&[1.0, 0.0]), 2.0).unwrap();
        assert!(next.norm() < 1.0);
    }

    #[test]
    fn ogda_two_step_recursion() {
        let id = affine(Matrix::identity(1, 1), Vector::zeros(1));
        let x0 = v(&[1.0]);
        // x_{k+1} = x_k - a x_k - e (x_k - x_{k-1}) for F(x) = x
        let (a, e) = (0.25, 0.25);
        let h1 = 1.0 - a * 1.0 - e * 0.0;
        let h2 = h1 - a * h1 - e * (h1 - 1.0);
        let x1 = ogda_step(&id, &x0, &x0, a, e).unwrap();
        assert!((x1[0] - h1).abs() < 1e-15);
        let x2 = ogda_step(&id, &x1, &x0, a, e).unwrap();
        assert!((x2[0] - h2).abs() < 1e-15);
        assert_eq!((h1, h2), (0.75, 0.625));

        let c = affine(Matrix::zeros(1, 1), v(&[2.0]));
        let cfg = FirstOrderConfig {
            max_iters: 3,
            tol_residual: 0.0,
            ..FirstOrderConfig::defaults(FirstOrderMethod::Ogda, 1.0).unwrap()
        };
        let t = run_first_order(&c, &cfg, &v(&[0.0])).unwrap();
        let xs: Vec<f64> = t.records.iter().map(|r| r.x_next.as_ref().unwrap()[0]).collect();
        assert_eq!(xs, vec![-0.5, -1.0, -1.5]);
    }

    #[test]
    fn zero_field_stops_immediately() {
        let zero = affine(Matrix::zeros(2, 2), Vector::zeros(2));
        let cfg = FirstOrderConfig::defaults(FirstOrderMethod::Extragradient, 1.0).unwrap();
        let t = run_first_order(&zero, &cfg, &v(&[1.0, 2.0])).unwrap();
        assert!(t.is_empty() && t.converged);
        assert_eq!(t.final_iterate, v(&[1.0, 2.0]));
    }

    #[test]
    fn projection_method_fails_on_rotation() {
        let rot = rotation();
        for gamma in [0.25, 0.5, 1.0] {
            let cfg = FirstOrderConfig {
                step_gamma: gamma,
                max_iters: 40,
                tol_residual: 0.0,
                ..FirstOrderConfig::defaults(FirstOrderMethod::Projection, 1.0).unwrap()
            };
            let t = match run_first_order(&rot, &cfg, &v(&[1.0, 0.0])) {
                Ok(t) => t,
                Err(Error::Divergence { trace, .. }) => *trace,
                Err(e) => panic!("{e}"),
            };
            let norms: Vec<f64> = t.records.iter().map(|r| r.x_next.as_ref().unwrap().norm()).collect();
            assert!(norms.windows(2).all(|w| w[1] >= w[0]), "gamma={gamma}");
        }
    }

    #[test]
    fn eg_reaches_affine_solution() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 1.0]);
        let b = v(&[1.0, -2.0]);
        let x_star = a.clone().lu().solve(&(-&b)).unwrap();
        let l1 = a.singular_values().max();
        let p = affine(a, b).with_constants(l1, 0.0, 1.0).unwrap();
        let cfg = FirstOrderConfig::defaults(FirstOrderMethod::Extragradient, l1).unwrap();
        let t = run_first_order(&p, &cfg, &Vector::zeros(2)).unwrap();
        assert!(t.converged);
        assert!((t.final_iterate - x_star).norm() < 1e-7);
    }

    #[test]
    fn divergence_is_reported_with_trace() {
        let grow = affine(-Matrix::identity(1, 1), Vector::zeros(1));
        let cfg = FirstOrderConfig {
            step_gamma: 0.5,
            max_iters: 1000,
            ..FirstOrderConfig::defaults(FirstOrderMethod::Projection, 1.0).unwrap()
        };
        match run_first_order(&grow, &cfg, &v(&[1.0])) {
            Err(Error::Divergence { k, trace, .. }) => assert_eq!(trace.len(), k),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let p = VIProblem::new(
            "box",
            Arc::new(AffineOperator::new(Matrix::identity(1, 1), Vector::zeros(1)).unwrap()),
            FeasibleSet::cube(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let cfg = FirstOrderConfig::defaults(FirstOrderMethod::Extragradient, 1.0).unwrap();
        assert!(matches!(run_first_order(&p, &cfg, &v(&[2.0])), Err(Error::Config(_))));
    }
}
