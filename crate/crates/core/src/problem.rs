//! Variational inequality problem instances.
//!
//! A problem is an operator `F: R^n -> R^n` over a [`FeasibleSet`], together
//! with the smoothness and monotonicity constants the solvers rely on. The
//! constants are declared by whoever builds the problem; the probes in this
//! module only report empirical estimates and never replace them.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{check_dim, Error, Result};
use crate::rng::Sampler;
use crate::sets::FeasibleSet;
use crate::{Matrix, Vector};

/// A vector field with an optional analytic Jacobian.
pub trait Operator: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &Vector) -> Vector;

    fn jacobian(&self, _x: &Vector) -> Option<Matrix> {
        None
    }
}

type VecFn = dyn Fn(&Vector) -> Vector + Send + Sync;
type MatFn = dyn Fn(&Vector) -> Matrix + Send + Sync;

/// Operator assembled from closures.
pub struct FnOperator {
    dim: usize,
    f: Box<VecFn>,
    jac: Option<Box<MatFn>>,
}

impl FnOperator {
    pub fn new(dim: usize, f: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        Self {
            dim,
            f: Box::new(f),
            jac: None,
        }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&Vector) -> Matrix + Send + Sync + 'static) -> Self {
        self.jac = Some(Box::new(jac));
        self
    }
}

impl Operator for FnOperator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &Vector) -> Vector {
        (self.f)(x)
    }
    fn jacobian(&self, x: &Vector) -> Option<Matrix> {
        self.jac.as_ref().map(|j| j(x))
    }
}

/// `F(x) = A x + b`.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    pub matrix: Matrix,
    pub offset: Vector,
}

impl AffineOperator {
    pub fn new(matrix: Matrix, offset: Vector) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Config("affine operator needs a square matrix".into()));
        }
        check_dim(matrix.nrows(), offset.len())?;
        Ok(Self { matrix, offset })
    }
}

impl Operator for AffineOperator {
    fn dim(&self) -> usize {
        self.offset.len()
    }
    fn eval(&self, x: &Vector) -> Vector {
        &self.matrix * x + &self.offset
    }
    fn jacobian(&self, _x: &Vector) -> Option<Matrix> {
        Some(self.matrix.clone())
    }
}

/// `F(x) = H(x) + G(x)`. The Jacobian exists only when both parts provide one.
pub struct SumOperator {
    pub h: Arc<dyn Operator>,
    pub g: Arc<dyn Operator>,
}

impl Operator for SumOperator {
    fn dim(&self) -> usize {
        self.h.dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        self.h.eval(x) + self.g.eval(x)
    }
    fn jacobian(&self, x: &Vector) -> Option<Matrix> {
        Some(self.h.jacobian(x)? + self.g.jacobian(x)?)
    }
}

/// A monotone VI: find `x* in X` with `<F(x*), x - x*> >= 0` for all `x in X`.
#[derive(Clone)]
pub struct VIProblem {
    name: String,
    operator: Arc<dyn Operator>,
    set: FeasibleSet,
    /// Lipschitz constant of `F`.
    pub l1: f64,
    /// Lipschitz constant of the Jacobian of `F`.
    pub l2: f64,
    /// Strong-monotonicity modulus (0 for merely monotone problems).
    pub mu: f64,
    reference: Arc<OnceLock<Vector>>,
    data_hash: Option<String>,
}

impl fmt::Debug for VIProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VIProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("set", &self.set)
            .field("l1", &self.l1)
            .field("l2", &self.l2)
            .field("mu", &self.mu)
            .finish()
    }
}

impl VIProblem {
    pub fn new(name: impl Into<String>, operator: Arc<dyn Operator>, set: FeasibleSet) -> Result<Self> {
        check_dim(set.dim(), operator.dim())?;
        Ok(Self {
            name: name.into(),
            operator,
            set,
            l1: 0.0,
            l2: 0.0,
            mu: 0.0,
            reference: Arc::new(OnceLock::new()),
            data_hash: None,
        })
    }

    /// Declare `(l1, l2, mu)`. A positive `l1` below `mu` is rejected.
    pub fn with_constants(mut self, l1: f64, l2: f64, mu: f64) -> Result<Self> {
        if [l1, l2, mu].iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::Config(format!(
                "constants must be finite and nonnegative (l1={l1}, l2={l2}, mu={mu})"
            )));
        }
        if l1 > 0.0 && l1 < mu {
            return Err(Error::Config(format!("l1 = {l1} is smaller than mu = {mu}")));
        }
        self.l1 = l1;
        self.l2 = l2;
        self.mu = mu;
        Ok(self)
    }

    pub fn with_reference_solution(self, x_star: Vector) -> Result<Self> {
        check_dim(self.dim(), x_star.len())?;
        let reference = OnceLock::new();
        let _ = reference.set(x_star);
        Ok(Self {
            reference: Arc::new(reference),
            ..self
        })
    }

    pub fn with_data_hash(mut self, hash: impl Into<String>) -> Self {
        self.data_hash = Some(hash.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn operator(&self) -> &Arc<dyn Operator> {
        &self.operator
    }

    pub fn data_hash(&self) -> Option<&str> {
        self.data_hash.as_deref()
    }

    /// `F(x)`; errors on a dimension mismatch.
    pub fn eval_operator(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(self.operator.eval(x))
    }

    /// `F(x)` without the dimension check, for solver inner loops.
    pub(crate) fn eval(&self, x: &Vector) -> Vector {
        self.operator.eval(x)
    }

    pub fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        check_dim(self.dim(), x.len())?;
        self.operator
            .jacobian(x)
            .ok_or_else(|| Error::MissingJacobian(self.name.clone()))
    }

    pub fn has_jacobian(&self) -> bool {
        self.operator.jacobian(&Vector::zeros(self.dim())).is_some()
    }

    /// The declared or previously computed solution, if any.
    pub fn known_reference_solution(&self) -> Option<&Vector> {
        self.reference.get()
    }

    /// The solution `x*`, computed once by a high-precision pre-solve when it
    /// was not declared. Used only by metrics.
    pub fn reference_solution(&self) -> Result<&Vector> {
        if let Some(x) = self.reference.get() {
            return Ok(x);
        }
        let x = crate::are::presolve_reference(self)?;
        Ok(self.reference.get_or_init(|| x))
    }
}

/// `F = H + G` with `H` smooth (Lipschitz constant `l_h`) and `G` monotone.
#[derive(Clone)]
pub struct CompositeProblem {
    pub h: Arc<dyn Operator>,
    pub g: Arc<dyn Operator>,
    pub l_h: f64,
    pub set: FeasibleSet,
}

impl CompositeProblem {
    pub fn new(h: Arc<dyn Operator>, g: Arc<dyn Operator>, l_h: f64, set: FeasibleSet) -> Result<Self> {
        check_dim(h.dim(), g.dim())?;
        check_dim(set.dim(), h.dim())?;
        if !(l_h >= 0.0) {
            return Err(Error::Config(format!("l_h must be nonnegative, got {l_h}")));
        }
        Ok(Self { h, g, l_h, set })
    }

    /// The VI problem with operator `H + G`.
    pub fn to_problem(&self, name: &str) -> Result<VIProblem> {
        let sum: Arc<dyn Operator> = Arc::new(SumOperator {
            h: self.h.clone(),
            g: self.g.clone(),
        });
        VIProblem::new(name, sum, self.set.clone())
    }
}

/// Central finite-difference Jacobian of `op` at `x`.
pub fn finite_difference_jacobian(op: &dyn Operator, x: &Vector) -> Matrix {
    let n = x.len();
    let mut jac = Matrix::zeros(op.dim(), n);
    let mut xp = x.clone();
    for j in 0..n {
        let h = 1e-6 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let fp = op.eval(&xp);
        xp[j] = x[j] - h;
        let fm = op.eval(&xp);
        xp[j] = x[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// `||J(x) - J_fd(x)|| / (1 + ||J(x)||)` in the Frobenius norm.
pub fn jacobian_consistency(problem: &VIProblem, x: &Vector) -> Result<f64> {
    let jac = problem.jacobian(x)?;
    let fd = finite_difference_jacobian(problem.operator().as_ref(), x);
    Ok((&jac - fd).norm() / (1.0 + jac.norm()))
}

/// Minimum over sampled pairs in the ball of `<F(x)-F(y), x-y> / ||x-y||^2`.
///
/// Sampling can only miss worse pairs, so the result is an upper estimate of
/// the true modulus.
pub fn monotonicity_probe(
    problem: &VIProblem,
    sampler: &mut Sampler,
    center: &Vector,
    radius: f64,
    n_pairs: usize,
) -> Result<f64> {
    check_dim(problem.dim(), center.len())?;
    if n_pairs == 0 {
        return Err(Error::Config("monotonicity probe needs at least one pair".into()));
    }
    let mut estimate = f64::INFINITY;
    for _ in 0..n_pairs {
        let x = sampler.point_in_ball(center, radius);
        let y = sampler.point_in_ball(center, radius);
        let d = &x - &y;
        let d2 = d.norm_squared();
        if d2 == 0.0 {
            continue;
        }
        let q = (problem.eval(&x) - problem.eval(&y)).dot(&d) / d2;
        estimate = estimate.min(q);
    }
    Ok(estimate)
}

/// Spectral norm `||B||_2` by power iteration on `B^T B`.
pub fn power_iteration_norm(b: &Matrix, iters: usize) -> f64 {
    let n = b.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut v = Vector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut sigma = 0.0;
    for _ in 0..iters {
        let w = b.tr_mul(&(b * &v));
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        sigma = nw.sqrt();
        v = w / nw;
    }
    sigma.max((b * &v).norm())
}
