//! Feasible sets with exact Euclidean projections.
//!
//! Only sets whose projection has a closed form are provided, so every
//! projection performed by a solver is exact up to rounding.

use crate::error::{check_dim, Error, Result};
use crate::Vector;

/// Shape of a feasible set.
#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    WholeSpace,
    /// Componentwise bounds; entries may be infinite.
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    NonnegativeOrthant,
}

/// A closed convex set `X` in `R^n`.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    kind: SetKind,
    dim: usize,
}

impl FeasibleSet {
    pub fn whole_space(dim: usize) -> Self {
        Self {
            kind: SetKind::WholeSpace,
            dim,
        }
    }

    pub fn nonnegative_orthant(dim: usize) -> Self {
        Self {
            kind: SetKind::NonnegativeOrthant,
            dim,
        }
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return Err(Error::InvalidSet("box requires lower <= upper componentwise".into()));
        }
        let dim = lower.len();
        Ok(Self {
            kind: SetKind::Box { lower, upper },
            dim,
        })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(Vector::from_element(dim, lo), Vector::from_element(dim, hi))
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSet(format!("ball radius must be positive, got {radius}")));
        }
        let dim = center.len();
        Ok(Self {
            kind: SetKind::Ball { center, radius },
            dim,
        })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self.kind, SetKind::WholeSpace)
    }

    pub fn is_bounded(&self) -> bool {
        self.diameter().is_some()
    }

    /// Euclidean projection of `z` onto the set.
    pub fn project(&self, z: &Vector) -> Result<Vector> {
        check_dim(self.dim, z.len())?;
        let mut out = z.clone();
        self.project_mut(&mut out);
        Ok(out)
    }

    /// In-place projection. The caller guarantees `z.len() == self.dim()`.
    pub fn project_mut(&self, z: &mut Vector) {
        debug_assert_eq!(z.len(), self.dim);
        match &self.kind {
            SetKind::WholeSpace => {}
            SetKind::Box { lower, upper } => {
                for i in 0..z.len() {
                    z[i] = z[i].clamp(lower[i], upper[i]);
                }
            }
            SetKind::Ball { center, radius } => {
                let dist = (&*z - center).norm();
                if dist > *radius {
                    let scale = radius / dist;
                    for i in 0..z.len() {
                        z[i] = center[i] + scale * (z[i] - center[i]);
                    }
                }
            }
            SetKind::NonnegativeOrthant => {
                for v in z.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
    }

    /// `max_{x, x' in X} ||x - x'||`, or `None` when the set is unbounded.
    pub fn diameter(&self) -> Option<f64> {
        match &self.kind {
            SetKind::WholeSpace | SetKind::NonnegativeOrthant => None,
            SetKind::Box { lower, upper } => {
                let d2: f64 = lower.iter().zip(upper.iter()).map(|(l, u)| (u - l) * (u - l)).sum();
                d2.is_finite().then(|| d2.sqrt())
            }
            SetKind::Ball { radius, .. } => Some(2.0 * radius),
        }
    }

    /// Largest violation of the set's defining inequalities at `x` (0 when feasible).
    pub fn violation(&self, x: &Vector) -> f64 {
        match &self.kind {
            SetKind::WholeSpace => 0.0,
            SetKind::Box { lower, upper } => x
                .iter()
                .enumerate()
                .map(|(i, v)| (lower[i] - v).max(v - upper[i]).max(0.0))
                .fold(0.0, f64::max),
            SetKind::Ball { center, radius } => ((x - center).norm() - radius).max(0.0),
            SetKind::NonnegativeOrthant => x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.len() == self.dim && self.violation(x) <= tol
    }

    /// A point of the set closest to the origin.
    pub fn anchor_point(&self) -> Vector {
        let mut z = Vector::zeros(self.dim);
        self.project_mut(&mut z);
        z
    }
}
