//! Per-iteration records produced by every solver.

use std::time::Instant;

use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// Subproblem solve followed by the extra-gradient correction.
    Are,
    /// Subproblem solution accepted as the next iterate.
    Ar,
    /// Projection, extra-gradient or optimistic step.
    FirstOrder,
    /// The subproblem returned the anchor itself: the anchor solves the VI.
    Stationary,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Are => "ARE",
            StepKind::Ar => "AR",
            StepKind::FirstOrder => "first-order",
            StepKind::Stationary => "stationary",
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// Outer iteration counter, starting at 1.
    pub k: usize,
    /// Restart epoch, starting at 1.
    pub epoch: usize,
    /// Iterate the step started from. `None` when iterates are not kept.
    pub x: Option<Vector>,
    pub x_half: Option<Vector>,
    pub x_next: Option<Vector>,
    /// `||x_half - x||`, always kept.
    pub step_norm: f64,
    pub gamma_k: f64,
    pub step_kind: StepKind,
    /// Termination residual of the run's current output after this step.
    pub residual: f64,
    pub inner_iters: usize,
    pub inner_residual: f64,
    pub wall_ns: u128,
}

/// Records of one solver run plus its weighted average.
#[derive(Debug, Clone, Default)]
pub struct ConvergenceTrace {
    pub method: String,
    pub records: Vec<TraceRecord>,
    /// `sum_k x_half_k / gamma_k / gamma_sum` over the ARE steps of the last epoch.
    pub averaged_iterate: Option<Vector>,
    /// `sum_k 1 / gamma_k` over the ARE steps of the last epoch.
    pub gamma_sum: f64,
    /// Weighted averages that closed each completed epoch, in order.
    pub epoch_outputs: Vec<Vector>,
    /// What the run returns as its answer.
    pub final_iterate: Vector,
    pub initial_residual: f64,
    pub converged: bool,
}

impl ConvergenceTrace {
    pub(crate) fn new(method: impl Into<String>, x_init: &Vector, initial_residual: f64) -> Self {
        Self {
            method: method.into(),
            final_iterate: x_init.clone(),
            initial_residual,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(self.initial_residual, |r| r.residual)
    }

    /// First iteration whose residual is at most `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        if self.initial_residual <= tol {
            return Some(0);
        }
        self.records.iter().find(|r| r.residual <= tol).map(|r| r.k)
    }

    /// Residual after iteration `k`, or after the last iteration if the run stopped earlier.
    pub fn residual_at(&self, k: usize) -> f64 {
        if k == 0 {
            return self.initial_residual;
        }
        self.records
            .iter()
            .take_while(|r| r.k <= k)
            .last()
            .map_or(self.initial_residual, |r| r.residual)
    }
}

/// Running `1/gamma`-weighted sum of subproblem solutions.
#[derive(Debug, Clone)]
pub(crate) struct WeightedAverage {
    sum: Vector,
    weight: f64,
}

impl WeightedAverage {
    pub fn new(dim: usize) -> Self {
        Self {
            sum: Vector::zeros(dim),
            weight: 0.0,
        }
    }

    pub fn push(&mut self, x_half: &Vector, gamma: f64) {
        self.sum.axpy(1.0 / gamma, x_half, 1.0);
        self.weight += 1.0 / gamma;
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> Option<Vector> {
        (self.weight > 0.0).then(|| &self.sum / self.weight)
    }
}

/// Monotonic clock started at the beginning of a run.
pub(crate) struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn elapsed_ns(&self) -> u128 {
        self.0.elapsed().as_nanos()
    }
}
