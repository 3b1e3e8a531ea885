//! The ARE update, restart epochs and the locally superlinear switching scheme.
//!
//! One ARE step from `x_k`:
//!
//! ```text
//! x_half  solves  VI_X( F~(.; x_k) + M ||. - x_k||^{p-1} (. - x_k) )
//! gamma_k = M ||x_half - x_k||^{p-1}
//! x_next  = P_X( x_k - F(x_half) / gamma_k )
//! ```
//!
//! The run output is the `1/gamma`-weighted average of the midpoints.

use crate::error::{check_dim, Error, Result};
use crate::first_order::DIVERGENCE_THRESHOLD;
use crate::metrics::natural_residual_with;
use crate::oracle::{taylor_oracle, ApproximationOracle};
use crate::problem::VIProblem;
use crate::subproblem::{solve_subproblem, LambdaSolve, Strategy, SubproblemInstance, DEFAULT_INNER_BUDGET};
use crate::trace::{ConvergenceTrace, Stopwatch, StepKind, TraceRecord, WeightedAverage};
use crate::Vector;

/// Solver settings shared by [`run_are`], [`run_are_restart`] and [`run_algorithm1`].
#[derive(Debug, Clone, PartialEq)]
pub struct AREConfig {
    pub p: usize,
    /// Regularization constant `M`. Defaults to `tau_oracle * lp / effective_tau`.
    pub reg_constant: Option<f64>,
    pub effective_tau: f64,
    pub delta: f64,
    pub alpha_local: f64,
    /// Estimate of `||x_init - x*||`. See [`AREConfig::resolve_d0`] for the default.
    pub d0: Option<f64>,
    /// Fixed epoch length, overriding the formula in [`epoch_length`].
    pub restart_n: Option<usize>,
    pub max_iters: usize,
    pub tol_residual: f64,
    /// Defaults to [`Strategy::default_for`] the oracle and set.
    pub subproblem_strategy: Option<Strategy>,
    /// Defaults to `0.01 * tol_residual` clamped to `[1e-13, 1e-10]`.
    pub subproblem_tol: Option<f64>,
    pub max_inner: usize,
    pub store_iterates: bool,
}

impl Default for AREConfig {
    fn default() -> Self {
        Self::new(2)
    }
}

impl AREConfig {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            reg_constant: None,
            effective_tau: 0.5,
            delta: 0.5,
            alpha_local: 0.5,
            d0: None,
            restart_n: None,
            max_iters: 1000,
            tol_residual: 1e-10,
            subproblem_strategy: None,
            subproblem_tol: None,
            max_inner: DEFAULT_INNER_BUDGET,
            store_iterates: true,
        }
    }

    /// Checks the scalar parameters and returns `M`.
    pub fn reg(&self, oracle: &ApproximationOracle) -> Result<f64> {
        if self.p == 0 {
            return Err(Error::UnsupportedOrder(0));
        }
        if oracle.order() != self.p {
            return Err(Error::Config(format!(
                "method order p = {} does not match oracle order {}",
                self.p,
                oracle.order()
            )));
        }
        if !(self.effective_tau > 0.0 && self.effective_tau < 1.0) {
            return Err(Error::Config(format!("effective_tau must lie in (0, 1), got {}", self.effective_tau)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.alpha_local > 0.0 && self.alpha_local < 1.0) {
            return Err(Error::Config(format!("alpha_local must lie in (0, 1), got {}", self.alpha_local)));
        }
        if !(self.tol_residual >= 0.0) {
            return Err(Error::Config("tol_residual must be nonnegative".into()));
        }
        let floor = oracle.tau() * oracle.lp() / self.effective_tau;
        match self.reg_constant {
            Some(m) if !(m > 0.0) || !m.is_finite() => {
                Err(Error::Config(format!("reg_constant must be positive, got {m}")))
            }
            Some(m) if m < floor * (1.0 - 1e-12) => Err(Error::Config(format!(
                "reg_constant {m} is below tau * lp / effective_tau = {floor}"
            ))),
            Some(m) => Ok(m),
            None if floor > 0.0 => Ok(floor),
            None => Err(Error::Config(
                "oracle bound constant is zero; set reg_constant explicitly".into(),
            )),
        }
    }

    /// Inner tolerance: given, or `0.01 * tol_residual` clamped to `[1e-13, 1e-10]`.
    pub fn sub_tol(&self) -> f64 {
        self.subproblem_tol
            .unwrap_or_else(|| (0.01 * self.tol_residual).clamp(1e-13, 1e-10))
    }

    pub fn strategy(&self, oracle: &ApproximationOracle, problem: &VIProblem) -> Strategy {
        self.subproblem_strategy
            .unwrap_or_else(|| Strategy::default_for(oracle, problem.set()))
    }

    /// `d0` when given; otherwise `||x_init|| + D/2` on bounded sets and, on
    /// unbounded sets with `mu > 0`, the error bound `||F(x_init)|| / mu`
    /// (whole space) or `(1 + l1) r(x_init) / mu` with `r` the natural
    /// residual (orthant).
    pub fn resolve_d0(&self, problem: &VIProblem, x_init: &Vector) -> Result<f64> {
        if let Some(d0) = self.d0 {
            if !(d0 > 0.0) {
                return Err(Error::Config(format!("d0 must be positive, got {d0}")));
            }
            return Ok(d0);
        }
        if let Some(diam) = problem.set().diameter() {
            return Ok(x_init.norm() + 0.5 * diam);
        }
        if !(problem.mu > 0.0) {
            return Err(Error::Config("d0 is required on unbounded sets".into()));
        }
        let fx = problem.eval_operator(x_init)?;
        if problem.set().is_whole_space() {
            return Ok(fx.norm() / problem.mu);
        }
        if problem.l1 > 0.0 {
            let r = natural_residual_with(problem, x_init, &fx);
            return Ok((1.0 + problem.l1) * r / problem.mu);
        }
        Err(Error::Config("d0 is required: no l1 declared for the error bound".into()))
    }
}

/// Outcome of one subproblem-based step.
#[derive(Debug, Clone)]
pub struct AreStep {
    pub x_half: Vector,
    pub x_next: Vector,
    pub gamma_k: f64,
    pub inner_iters: usize,
    pub inner_residual: f64,
    /// `x_half` solves the VI; no extra-gradient step was taken.
    pub stationary: bool,
}

struct Stepper<'a> {
    problem: &'a VIProblem,
    oracle: &'a ApproximationOracle,
    config: &'a AREConfig,
    reg: f64,
    strategy: Strategy,
    sub_tol: f64,
}

impl<'a> Stepper<'a> {
    fn new(problem: &'a VIProblem, oracle: &'a ApproximationOracle, config: &'a AREConfig) -> Result<Self> {
        let reg = config.reg(oracle)?;
        Ok(Self {
            problem,
            oracle,
            config,
            reg,
            strategy: config.strategy(oracle, problem),
            sub_tol: config.sub_tol(),
        })
    }

    fn check_start(&self, x: &Vector) -> Result<()> {
        check_dim(self.problem.dim(), x.len())?;
        if !self.problem.set().contains(x, 1e-12 * (1.0 + x.norm())) {
            return Err(Error::Config("initial point is not feasible".into()));
        }
        Ok(())
    }

    fn solve(&self, x_k: &Vector) -> Result<LambdaSolve> {
        let mut inst = SubproblemInstance::new(self.oracle, x_k, self.reg, self.problem.set());
        inst.p = self.config.p;
        inst.max_inner = self.config.max_inner;
        solve_subproblem(&inst, self.strategy, self.sub_tol)
    }

    /// Subproblem solve plus `gamma_k` and the stationarity guard.
    fn half_step(&self, x_k: &Vector) -> Result<(LambdaSolve, f64, bool)> {
        let sol = self.solve(x_k)?;
        let p = self.config.p as i32;
        let d = (&sol.x_half - x_k).norm();
        let gamma = self.reg * d.powi(p - 1);
        let stationary = d == 0.0 || gamma < 1e-14 * (1.0 + x_k.norm()).powi(p - 1);
        Ok((sol, gamma, stationary))
    }

    fn extra_step(&self, x_k: &Vector, x_half: &Vector, gamma: f64) -> Vector {
        let mut z = x_k - self.problem.eval(x_half) / gamma;
        self.problem.set().project_mut(&mut z);
        z
    }

    fn are_step(&self, x_k: &Vector) -> Result<AreStep> {
        let (sol, gamma, stationary) = self.half_step(x_k)?;
        let x_next = if stationary {
            sol.x_half.clone()
        } else {
            self.extra_step(x_k, &sol.x_half, gamma)
        };
        Ok(AreStep {
            x_half: sol.x_half,
            x_next,
            gamma_k: gamma,
            inner_iters: sol.inner_iters,
            inner_residual: sol.residual,
            stationary,
        })
    }

    fn residual(&self, x: &Vector) -> f64 {
        natural_residual_with(self.problem, x, &self.problem.eval(x))
    }
}

/// One ARE step from a feasible `x_k`.
pub fn are_step(
    problem: &VIProblem,
    oracle: &ApproximationOracle,
    x_k: &Vector,
    config: &AREConfig,
) -> Result<AreStep> {
    let stepper = Stepper::new(problem, oracle, config)?;
    stepper.check_start(x_k)?;
    stepper.are_step(x_k)
}

/// One AR step: the subproblem solution becomes the next iterate.
pub fn ar_step(problem: &VIProblem, oracle: &ApproximationOracle, x_k: &Vector, config: &AREConfig) -> Result<AreStep> {
    let stepper = Stepper::new(problem, oracle, config)?;
    stepper.check_start(x_k)?;
    let (sol, gamma, stationary) = stepper.half_step(x_k)?;
    Ok(AreStep {
        x_next: sol.x_half.clone(),
        x_half: sol.x_half,
        gamma_k: gamma,
        inner_iters: sol.inner_iters,
        inner_residual: sol.residual,
        stationary,
    })
}

/// `||x_half - x_k||^{p-1} <= alpha sqrt(1 - tau^2) / (1 + tau) * mu / M`.
pub fn local_condition(x_half: &Vector, x_k: &Vector, config: &AREConfig, reg: f64, mu: f64) -> Result<bool> {
    if config.p <= 1 {
        return Err(Error::LocalConditionUnsupported);
    }
    if !(mu > 0.0) {
        return Err(Error::NotStronglyMonotone);
    }
    Ok((x_half - x_k).norm().powi(config.p as i32 - 1) <= local_threshold(config, reg, mu))
}

fn local_threshold(config: &AREConfig, reg: f64, mu: f64) -> f64 {
    let tau = config.effective_tau;
    config.alpha_local * (1.0 - tau * tau).sqrt() / (1.0 + tau) * mu / reg
}

/// Epoch length `ceil((M / (2 delta mu))^{2/(p+1)} (d0^2 / (1 - tau^2))^{(p-1)/(p+1)})`, at least 1.
pub fn epoch_length(config: &AREConfig, reg: f64, mu: f64, d0: f64) -> Result<usize> {
    if !(mu > 0.0) {
        return Err(Error::NotStronglyMonotone);
    }
    let p = config.p as f64;
    let tau = config.effective_tau;
    let first = (reg / (2.0 * config.delta * mu)).powf(2.0 / (p + 1.0));
    let second = (d0 * d0 / (1.0 - tau * tau)).powf((p - 1.0) / (p + 1.0));
    let n = (first * second * (1.0 - 1e-12)).ceil();
    if !n.is_finite() {
        return Err(Error::Config(format!("epoch length overflows ({first} * {second})")));
    }
    Ok((n as usize).max(1))
}

/// State of the epoch-based runs.
struct Run<'a> {
    stepper: Stepper<'a>,
    trace: ConvergenceTrace,
    avg: WeightedAverage,
    clock: Stopwatch,
    epoch: usize,
}

struct Step {
    x: Vector,
    x_half: Vector,
    x_next: Vector,
    gamma_k: f64,
    kind: StepKind,
    residual: f64,
    inner_iters: usize,
    inner_residual: f64,
}

impl<'a> Run<'a> {
    fn start(
        method: &str,
        problem: &'a VIProblem,
        oracle: &'a ApproximationOracle,
        config: &'a AREConfig,
        x_init: &Vector,
    ) -> Result<Self> {
        let stepper = Stepper::new(problem, oracle, config)?;
        stepper.check_start(x_init)?;
        let init_res = stepper.residual(x_init);
        Ok(Self {
            trace: ConvergenceTrace::new(method, x_init, init_res),
            avg: WeightedAverage::new(problem.dim()),
            clock: Stopwatch::start(),
            epoch: 1,
            stepper,
        })
    }

    fn push(&mut self, k: usize, step: Step) -> Result<()> {
        let keep = self.stepper.config.store_iterates;
        let Step {
            x,
            x_half,
            x_next,
            gamma_k,
            kind,
            residual,
            inner_iters,
            inner_residual,
        } = step;
        self.trace.records.push(TraceRecord {
            k,
            epoch: self.epoch,
            step_norm: (&x_half - &x).norm(),
            x: keep.then_some(x),
            x_half: keep.then_some(x_half),
            x_next: keep.then_some(x_next),
            gamma_k,
            step_kind: kind,
            residual,
            inner_iters,
            inner_residual,
            wall_ns: self.clock.elapsed_ns(),
        });
        if !residual.is_finite() || residual > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergence {
                k,
                residual,
                trace: Box::new(std::mem::take(&mut self.trace)),
            });
        }
        Ok(())
    }

    /// One ARE step whose residual is measured at the running average.
    /// Returns `(x_next, converged)`.
    fn are(&mut self, k: usize, x: Vector) -> Result<(Vector, bool)> {
        let s = self.stepper.are_step(&x)?;
        if s.stationary {
            return self.stationary(k, x, s);
        }
        self.avg.push(&s.x_half, s.gamma_k);
        let mean = self.avg.mean().expect("weight is positive after a push");
        let residual = self.stepper.residual(&mean);
        let x_next = s.x_next.clone();
        self.push(
            k,
            Step {
                x,
                x_half: s.x_half,
                x_next: s.x_next,
                gamma_k: s.gamma_k,
                kind: StepKind::Are,
                residual,
                inner_iters: s.inner_iters,
                inner_residual: s.inner_residual,
            },
        )?;
        self.trace.final_iterate = mean;
        Ok((x_next, residual <= self.stepper.config.tol_residual))
    }

    fn stationary(&mut self, k: usize, x: Vector, s: AreStep) -> Result<(Vector, bool)> {
        let residual = self.stepper.residual(&s.x_half);
        self.trace.final_iterate = s.x_half.clone();
        let x_next = s.x_next.clone();
        self.push(
            k,
            Step {
                x,
                x_half: s.x_half,
                x_next: s.x_next,
                gamma_k: s.gamma_k,
                kind: StepKind::Stationary,
                residual,
                inner_iters: s.inner_iters,
                inner_residual: s.inner_residual,
            },
        )?;
        Ok((x_next, true))
    }

    /// Close the epoch and return the weighted average as the next start.
    fn restart(&mut self) -> Option<Vector> {
        let mean = self.avg.mean()?;
        self.trace.epoch_outputs.push(mean.clone());
        self.avg = WeightedAverage::new(mean.len());
        self.epoch += 1;
        Some(mean)
    }

    fn finish(mut self, converged: bool) -> ConvergenceTrace {
        self.trace.converged = converged;
        self.trace.gamma_sum = self.avg.weight();
        self.trace.averaged_iterate = self.avg.mean();
        self.trace
    }
}

/// Plain ARE with weighted averaging; the residual is measured at the average.
pub fn run_are(
    problem: &VIProblem,
    oracle: &ApproximationOracle,
    config: &AREConfig,
    x_init: &Vector,
) -> Result<ConvergenceTrace> {
    let mut run = Run::start("ARE", problem, oracle, config, x_init)?;
    let mut x = x_init.clone();
    for k in 1..=config.max_iters {
        let (next, done) = run.are(k, x)?;
        x = next;
        if done {
            return Ok(run.finish(true));
        }
    }
    Ok(run.finish(false))
}

/// ARE in epochs: after each epoch the weighted average becomes the new start.
pub fn run_are_restart(
    problem: &VIProblem,
    oracle: &ApproximationOracle,
    config: &AREConfig,
    x_init: &Vector,
) -> Result<ConvergenceTrace> {
    if !(problem.mu > 0.0) {
        return Err(Error::NotStronglyMonotone);
    }
    let mut run = Run::start("ARE-restart", problem, oracle, config, x_init)?;
    let n = match config.restart_n {
        Some(n) => n.max(1),
        None => epoch_length(config, run.stepper.reg, problem.mu, config.resolve_d0(problem, x_init)?)?,
    };
    log::debug!("ARE-restart epoch length {n}");
    let mut x = x_init.clone();
    let mut in_epoch = 0;
    for k in 1..=config.max_iters {
        let (next, done) = run.are(k, x)?;
        x = next;
        if done {
            return Ok(run.finish(true));
        }
        in_epoch += 1;
        if in_epoch == n {
            in_epoch = 0;
            if let Some(mean) = run.restart() {
                x = mean;
            }
        }
    }
    Ok(run.finish(false))
}

/// ARE-restart that accepts the subproblem solution directly (an AR step)
/// whenever the local condition holds.
///
/// An AR step discards the current epoch's average and starts a fresh epoch
/// at the accepted point. AR records carry the residual of the new iterate;
/// ARE records the residual of the running average.
pub fn run_algorithm1(
    problem: &VIProblem,
    oracle: &ApproximationOracle,
    config: &AREConfig,
    x_init: &Vector,
) -> Result<ConvergenceTrace> {
    if config.p <= 1 {
        return Err(Error::LocalConditionUnsupported);
    }
    if !(problem.mu > 0.0) {
        return Err(Error::NotStronglyMonotone);
    }
    let mut run = Run::start("ARE-local", problem, oracle, config, x_init)?;
    let reg = run.stepper.reg;
    let n = match config.restart_n {
        Some(n) => n.max(1),
        None => epoch_length(config, reg, problem.mu, config.resolve_d0(problem, x_init)?)?,
    };
    let threshold = local_threshold(config, reg, problem.mu);
    let p = config.p as i32;
    let mut x = x_init.clone();
    let mut in_epoch = 0;
    for k in 1..=config.max_iters {
        let (sol, gamma, stationary) = run.stepper.half_step(&x)?;
        if stationary {
            let s = AreStep {
                x_next: sol.x_half.clone(),
                x_half: sol.x_half,
                gamma_k: gamma,
                inner_iters: sol.inner_iters,
                inner_residual: sol.residual,
                stationary,
            };
            run.stationary(k, x, s)?;
            return Ok(run.finish(true));
        }
        if (&sol.x_half - &x).norm().powi(p - 1) <= threshold {
            let residual = run.stepper.residual(&sol.x_half);
            let x_next = sol.x_half.clone();
            run.push(
                k,
                Step {
                    x,
                    x_half: sol.x_half.clone(),
                    x_next: sol.x_half,
                    gamma_k: gamma,
                    kind: StepKind::Ar,
                    residual,
                    inner_iters: sol.inner_iters,
                    inner_residual: sol.residual,
                },
            )?;
            run.avg = WeightedAverage::new(x_next.len());
            in_epoch = 0;
            run.trace.final_iterate = x_next.clone();
            x = x_next;
            if residual <= config.tol_residual {
                return Ok(run.finish(true));
            }
            continue;
        }
        let x_next = run.stepper.extra_step(&x, &sol.x_half, gamma);
        run.avg.push(&sol.x_half, gamma);
        let mean = run.avg.mean().expect("weight is positive after a push");
        let residual = run.stepper.residual(&mean);
        run.push(
            k,
            Step {
                x,
                x_half: sol.x_half,
                x_next: x_next.clone(),
                gamma_k: gamma,
                kind: StepKind::Are,
                residual,
                inner_iters: sol.inner_iters,
                inner_residual: sol.residual,
            },
        )?;
        run.trace.final_iterate = mean;
        if residual <= config.tol_residual {
            return Ok(run.finish(true));
        }
        x = x_next;
        in_epoch += 1;
        if in_epoch == n {
            in_epoch = 0;
            if let Some(mean) = run.restart() {
                x = mean;
            }
        }
    }
    Ok(run.finish(false))
}

/// High-precision solution used as `x*` by the metrics: the switching scheme
/// with the second-order Taylor oracle, run to residual `1e-13`.
pub fn presolve_reference(problem: &VIProblem) -> Result<Vector> {
    if !(problem.mu > 0.0) {
        return Err(Error::NotStronglyMonotone);
    }
    let oracle = taylor_oracle(problem, 2)?;
    let config = AREConfig {
        reg_constant: Some(if oracle.lp() > 0.0 {
            oracle.tau() * oracle.lp() / 0.5
        } else {
            problem.mu
        }),
        max_iters: 100_000,
        tol_residual: 1e-13,
        subproblem_tol: Some(1e-15),
        store_iterates: false,
        ..AREConfig::new(2)
    };
    let x0 = problem.set().anchor_point();
    let trace = run_algorithm1(problem, &oracle, &config, &x0)?;
    let res = trace.final_residual();
    if res > 1e-10 {
        return Err(Error::InsufficientData(format!("reference pre-solve stalled at residual {res:e}")));
    }
    Ok(trace.final_iterate)
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

    fn scalar_two() -> VIProblem {
        VIProblem::new(
            "diag2",
            Arc::new(AffineOperator::new(Matrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap()),
            FeasibleSet::whole_space(1),
        )
        .unwrap()
        .with_constants(2.0, 1.0, 2.0)
        .unwrap()
    }

    fn p2(reg: f64) -> AREConfig {
        AREConfig {
            reg_constant: Some(reg),
            ..AREConfig::new(2)
        }
    }

    #[test]
    fn scalar_are_step() {
        let p = scalar_two();
        let o = taylor_oracle(&p, 2).unwrap();
        let s = are_step(&p, &o, &v(&[1.0]), &p2(1.0)).unwrap();
        let lambda = 3f64.sqrt() - 1.0;
        assert!((s.x_half[0] - (1.0 - lambda)).abs() < 1e-10);
        assert!((s.gamma_k - lambda).abs() < 1e-10);
        assert!((s.x_next[0] - (1.0 - 2.0 * s.x_half[0] / s.gamma_k)).abs() < 1e-12);
        let ar = ar_step(&p, &o, &v(&[1.0]), &p2(1.0)).unwrap();
        assert_eq!(ar.x_next, ar.x_half);
    }

    #[test]
    fn p1_taylor_step_is_extragradient() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, -2.0, 0.5]);
        let p = VIProblem::new(
            "aff",
            Arc::new(AffineOperator::new(a, v(&[0.3, -0.1])).unwrap()),
            FeasibleSet::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap()
        .with_constants(3.0, 0.0, 0.0)
        .unwrap();
        let o = taylor_oracle(&p, 1).unwrap();
        let cfg = AREConfig {
            reg_constant: Some(6.0),
            ..AREConfig::new(1)
        };
        let x = v(&[0.5, -0.25]);
        let s = are_step(&p, &o, &x, &cfg).unwrap();
        let (h, n) = crate::first_order::extragradient_step(&p, &x, 6.0).unwrap();
        assert!((s.x_half - h).norm() < 1e-12);
        assert!((s.x_next - n).norm() < 1e-12);
        assert_eq!(s.gamma_k, 6.0);
    }

    #[test]
    fn zero_field_is_stationary() {
        let p = VIProblem::new(
            "zero",
            Arc::new(AffineOperator::new(Matrix::zeros(2, 2), Vector::zeros(2)).unwrap()),
            FeasibleSet::whole_space(2),
        )
        .unwrap();
        let o = taylor_oracle(&p, 2).unwrap();
        let x = v(&[0.4, 0.1]);
        let s = are_step(&p, &o, &x, &p2(1.0)).unwrap();
        assert!(s.stationary && s.x_next == x);
        let t = run_are(&p, &o, &p2(1.0), &x).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.converged);
        assert_eq!(t.final_iterate, x);
    }

    #[test]
    fn local_condition_threshold() {
        let cfg = AREConfig {
            alpha_local: 0.5,
            effective_tau: 0.5,
            ..AREConfig::new(2)
        };
        let threshold = 0.5 * 0.75f64.sqrt() / 1.5;
        assert!((threshold - 0.2886751).abs() < 1e-7);
        let x = v(&[0.0]);
        assert!(local_condition(&x, &x, &cfg, 1.0, 1.0).unwrap());
        assert!(!local_condition(&v(&[0.29]), &x, &cfg, 1.0, 1.0).unwrap());
        assert!(local_condition(&v(&[0.28]), &x, &cfg, 1.0, 1.0).unwrap());
        assert!(!local_condition(&v(&[1e6]), &x, &cfg, 1.0, 1.0).unwrap());
        let p1 = AREConfig::new(1);
        assert!(matches!(
            local_condition(&x, &x, &p1, 1.0, 1.0),
            Err(Error::LocalConditionUnsupported)
        ));
    }

    #[test]
    fn epoch_length_cases() {
        let cfg = AREConfig::new(1);
        assert_eq!(epoch_length(&cfg, 3.0, 1.0, 5.0).unwrap(), 3);
        let cfg = AREConfig::new(2);
        assert_eq!(epoch_length(&cfg, 1.0, 1.0, 0.75f64.sqrt()).unwrap(), 1);
        assert!(matches!(epoch_length(&cfg, 1.0, 0.0, 1.0), Err(Error::NotStronglyMonotone)));
    }

    #[test]
    fn config_validation() {
        let p = scalar_two();
        let o = taylor_oracle(&p, 2).unwrap();
        assert_eq!(AREConfig::new(2).reg(&o).unwrap(), 1.0);
        assert!(AREConfig { reg_constant: Some(0.5), ..AREConfig::new(2) }.reg(&o).is_err());
        assert!(AREConfig { effective_tau: 1.0, ..AREConfig::new(2) }.reg(&o).is_err());
        assert!(AREConfig::new(1).reg(&o).is_err());
        assert!(AREConfig::new(2).sub_tol() == 1e-12);
    }

    #[test]
    fn presolve_matches_closed_form() {
        let a = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, -1.0, 3.0, 0.5, 0.0, -0.5, 1.5]);
        let b = v(&[1.0, -2.0, 0.5]);
        let x_star = a.clone().lu().solve(&(-&b)).unwrap();
        let p = VIProblem::new("aff", Arc::new(AffineOperator::new(a, b).unwrap()), FeasibleSet::whole_space(3))
            .unwrap()
            .with_constants(4.0, 0.0, 1.0)
            .unwrap();
        let r = p.reference_solution().unwrap();
        assert!((r - x_star).norm() < 1e-12);
    }
}
