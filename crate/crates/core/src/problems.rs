//! Built-in problem instances: seeded affine fields, the regularized
//! logistic saddle point, and a composite demo with a cubic-regularizer part.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problem::{AffineOperator, CompositeProblem, FnOperator, Operator, VIProblem};
use crate::rng::Sampler;
use crate::sets::FeasibleSet;
use crate::{Matrix, Vector};

/// Names accepted by the command line.
pub const BUILTIN_NAMES: [&str; 3] = ["affine", "logistic-saddle", "composite-demo"];

/// `F(x) = A x + b` with `l1 = ||A||_2`, `l2 = 0`, `mu = lambda_min((A + A^T)/2)^+`.
///
/// On the whole space with invertible `A` the solution `-A^{-1} b` is attached.
pub fn affine(name: &str, matrix: Matrix, offset: Vector, set: FeasibleSet) -> Result<VIProblem> {
    let l1 = matrix.singular_values().max();
    let mu = matrix.symmetric_part().symmetric_eigenvalues().min().max(0.0);
    let x_star = if set.is_whole_space() {
        matrix.clone().lu().solve(&(-&offset))
    } else {
        None
    };
    let op = AffineOperator::new(matrix, offset)?;
    let problem = VIProblem::new(name, Arc::new(op), set)?.with_constants(l1, 0.0, mu.min(l1))?;
    match x_star {
        Some(x) => problem.with_reference_solution(x),
        None => Ok(problem),
    }
}

/// Random affine field: symmetric part `Q diag(mu .. l_sym) Q^T` with a random
/// orthogonal `Q` and evenly spaced eigenvalues, plus a skew part of spectral
/// norm `skew`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSpec {
    pub dim: usize,
    pub mu: f64,
    pub l_sym: f64,
    pub skew: f64,
    pub seed: u64,
}

impl AffineSpec {
    pub fn matrix_and_offset(&self) -> Result<(Matrix, Vector)> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if !(self.mu >= 0.0 && self.l_sym >= self.mu && self.skew >= 0.0) {
            return Err(Error::Config(format!(
                "need 0 <= mu <= l_sym and skew >= 0 (mu={}, l_sym={}, skew={})",
                self.mu, self.l_sym, self.skew
            )));
        }
        let mut s = Sampler::new(self.seed);
        let g = Matrix::from_fn(n, n, |_, _| s.standard_normal());
        let q = g.qr().q();
        let eig = Vector::from_fn(n, |i, _| {
            if n == 1 {
                self.mu
            } else {
                self.mu + (self.l_sym - self.mu) * i as f64 / (n - 1) as f64
            }
        });
        let sym = &q * Matrix::from_diagonal(&eig) * q.transpose();
        let sym = (&sym + sym.transpose()) * 0.5;
        let k = Matrix::from_fn(n, n, |_, _| s.standard_normal());
        let k = &k - k.transpose();
        let k_norm = k.singular_values().max();
        let skew = if k_norm > 0.0 { k * (self.skew / k_norm) } else { k };
        let offset = s.normal_vector(n);
        Ok((sym + skew, offset))
    }
}

pub fn random_affine(spec: &AffineSpec, set: FeasibleSet) -> Result<VIProblem> {
    let (a, b) = spec.matrix_and_offset()?;
    let problem = affine("affine", a, b, set)?;
    // the construction fixes mu; keep it exact rather than the eigen-solver's rounding
    let l1 = problem.l1.max(spec.mu);
    problem.with_constants(l1, 0.0, spec.mu)
}

/// Monotone but not strongly monotone: `F(x) = K x + b` with `K` skew and `||K||_2 = scale`.
pub fn skew_affine(dim: usize, scale: f64, seed: u64, set: FeasibleSet) -> Result<VIProblem> {
    let spec = AffineSpec {
        dim,
        mu: 0.0,
        l_sym: 0.0,
        skew: scale,
        seed,
    };
    let (a, b) = spec.matrix_and_offset()?;
    let problem = affine("skew-affine", a, b, set)?;
    let l1 = problem.l1;
    problem.with_constants(l1, 0.0, 0.0)
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Data of the regularized logistic saddle point
///
/// ```text
/// min_x max_y  (1/M1) sum_i ln(1 + exp(-a_i^T x)) + (lambda/2)||x||^2
///              + x^T A y - (1/M2) sum_j ln(1 + exp(-b_j^T y)) - (lambda/2)||y||^2
/// ```
///
/// with `x in R^n`, `y in R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticSaddleData {
    /// `M1 x n`, row `i` is `a_i`.
    pub a: Matrix,
    /// `M2 x m`, row `j` is `b_j`.
    pub b: Matrix,
    /// Coupling `A`, `n x m`.
    pub coupling: Matrix,
    pub lambda: f64,
}

impl LogisticSaddleData {
    /// Standard normal entries from [`Sampler`] in the order: the `a_i`, the
    /// `b_j`, then `A` row by row.
    pub fn generate(seed: u64, m1: usize, m2: usize, n: usize, m: usize, lambda: f64) -> Result<Self> {
        if [m1, m2, n, m].contains(&0) {
            return Err(Error::Config(format!("sizes must be positive (m1={m1}, m2={m2}, n={n}, m={m})")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be nonnegative, got {lambda}")));
        }
        let mut s = Sampler::new(seed);
        let mut draw = |rows: usize, cols: usize| {
            let data: Vec<f64> = (0..rows * cols).map(|_| s.standard_normal()).collect();
            Matrix::from_row_slice(rows, cols, &data)
        };
        let a = draw(m1, n);
        let b = draw(m2, m);
        let coupling = draw(n, m);
        Ok(Self { a, b, coupling, lambda })
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Every number of the instance, little-endian, in generation order, followed by `lambda`.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 * (self.a.len() + self.b.len() + self.coupling.len() + 1));
        for mat in [&self.a, &self.b, &self.coupling] {
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    out.extend_from_slice(&mat[(i, j)].to_le_bytes());
                }
            }
        }
        out.extend_from_slice(&self.lambda.to_le_bytes());
        out
    }

    /// Upper bound on `||J(u)||_2`: `lambda + max(||C_a||^2/(4 M1), ||C_b||^2/(4 M2)) + ||A||_2`.
    pub fn l1_bound(&self) -> f64 {
        let ga = self.a.singular_values().max().powi(2) / (4.0 * self.a.nrows() as f64);
        let gb = self.b.singular_values().max().powi(2) / (4.0 * self.b.nrows() as f64);
        self.lambda + ga.max(gb) + self.coupling.singular_values().max()
    }

    /// The saddle function `f(x, y)`.
    pub fn saddle_value(&self, u: &Vector) -> f64 {
        let (n, m) = (self.n(), self.m());
        let x = u.rows(0, n);
        let y = u.rows(n, m);
        let softplus = |t: f64| if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
        let lx: f64 = (&self.a * x).iter().map(|t| softplus(-t)).sum::<f64>() / self.a.nrows() as f64;
        let ly: f64 = (&self.b * y).iter().map(|t| softplus(-t)).sum::<f64>() / self.b.nrows() as f64;
        lx + 0.5 * self.lambda * x.norm_squared() + x.dot(&(&self.coupling * y))
            - ly
            - 0.5 * self.lambda * y.norm_squared()
    }

    /// `F(u) = (grad_x f, -grad_y f)`.
    pub fn operator_value(&self, u: &Vector) -> Vector {
        let (n, m) = (self.n(), self.m());
        let x = u.rows(0, n);
        let y = u.rows(n, m);
        let wa = (&self.a * x).map(|t| sigmoid(-t));
        let wb = (&self.b * y).map(|t| sigmoid(-t));
        let gx = -(self.a.tr_mul(&wa)) / self.a.nrows() as f64 + x * self.lambda + &self.coupling * y;
        let gy = -(self.b.tr_mul(&wb)) / self.b.nrows() as f64 + y * self.lambda - self.coupling.tr_mul(&x);
        let mut out = Vector::zeros(n + m);
        out.rows_mut(0, n).copy_from(&gx);
        out.rows_mut(n, m).copy_from(&gy);
        out
    }

    pub fn jacobian(&self, u: &Vector) -> Matrix {
        let (n, m) = (self.n(), self.m());
        let x = u.rows(0, n);
        let y = u.rows(n, m);
        let curvature = |data: &Matrix, z: Vector| -> Matrix {
            let w = z.map(|t| {
                let s = sigmoid(-t);
                s * (1.0 - s)
            });
            let mut scaled = data.clone();
            for (i, mut row) in scaled.row_iter_mut().enumerate() {
                row *= w[i];
            }
            data.tr_mul(&scaled) / data.nrows() as f64
        };
        let hx = curvature(&self.a, &self.a * x);
        let hy = curvature(&self.b, &self.b * y);
        let mut jac = Matrix::zeros(n + m, n + m);
        jac.view_mut((0, 0), (n, n)).copy_from(&hx);
        jac.view_mut((0, n), (n, m)).copy_from(&self.coupling);
        jac.view_mut((n, 0), (m, n)).copy_from(&(-self.coupling.transpose()));
        jac.view_mut((n, n), (m, m)).copy_from(&hy);
        for i in 0..n + m {
            jac[(i, i)] += self.lambda;
        }
        jac
    }

    /// The unconstrained VI with `l1` from [`Self::l1_bound`], `mu = lambda`
    /// and the given `l2`.
    pub fn to_problem(&self, l2: f64) -> Result<VIProblem> {
        let dim = self.n() + self.m();
        let (d1, d2) = (Arc::new(self.clone()), Arc::new(self.clone()));
        let op = FnOperator::new(dim, move |u: &Vector| d1.operator_value(u))
            .with_jacobian(move |u: &Vector| d2.jacobian(u));
        VIProblem::new("logistic-saddle", Arc::new(op), FeasibleSet::whole_space(dim))?.with_constants(
            self.l1_bound(),
            l2,
            self.lambda,
        )
    }
}

/// Composite demo on `dim` coordinates: `H(x) = B x + c` with `B` the sum of
/// a small symmetric PSD part and a skew part, and
/// `G(x) = w ||x - z|| (x - z)`, the gradient field of `(w/3)||x - z||^3`.
pub fn composite_demo(seed: u64, dim: usize, set: FeasibleSet) -> Result<CompositeProblem> {
    let spec = AffineSpec {
        dim,
        mu: 0.1,
        l_sym: 1.0,
        skew: 2.0,
        seed,
    };
    let (b, c) = spec.matrix_and_offset()?;
    let l_h = b.singular_values().max();
    let mut s = Sampler::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let z = set.anchor_point() + s.normal_vector(dim) * 0.5;
    let weight = 0.5;
    let h: Arc<dyn Operator> = Arc::new(AffineOperator::new(b, c)?);
    let (z1, z2) = (z.clone(), z);
    let g = FnOperator::new(dim, move |x: &Vector| {
        let d = x - &z1;
        let r = d.norm();
        d * (weight * r)
    })
    .with_jacobian(move |x: &Vector| {
        let d = x - &z2;
        let r = d.norm();
        if r == 0.0 {
            return Matrix::zeros(d.len(), d.len());
        }
        (Matrix::identity(d.len(), d.len()) * r + &d * d.transpose() / r) * weight
    });
    CompositeProblem::new(h, Arc::new(g), l_h, set)
}

/// The composite demo as a plain VI with `l1 = l_h` only as a lower
/// indication (the cubic part is not globally Lipschitz), `l2 = 2 w` and
/// `mu = 0.1`.
pub fn composite_demo_problem(seed: u64, dim: usize, set: FeasibleSet) -> Result<VIProblem> {
    let comp = composite_demo(seed, dim, set)?;
    let l_h = comp.l_h;
    comp.to_problem("composite-demo")?.with_constants(l_h, 1.0, 0.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{finite_difference_jacobian, jacobian_consistency, monotonicity_probe};

    #[test]
    fn random_affine_has_declared_constants() {
        let spec = AffineSpec {
            dim: 6,
            mu: 1.0,
            l_sym: 10.0,
            skew: 0.0,
            seed: 3,
        };
        let p = random_affine(&spec, FeasibleSet::whole_space(6)).unwrap();
        assert!((p.l1 - 10.0).abs() < 1e-9);
        assert_eq!(p.mu, 1.0);
        let x = p.known_reference_solution().unwrap();
        assert!(p.eval_operator(x).unwrap().norm() < 1e-12);
        let mut s = Sampler::new(1);
        let est = monotonicity_probe(&p, &mut s, &Vector::zeros(6), 3.0, 200).unwrap();
        assert!(est >= 1.0 - 1e-9);
    }

    #[test]
    fn skew_affine_is_merely_monotone() {
        let p = skew_affine(4, 1.0, 5, FeasibleSet::cube(4, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.mu, 0.0);
        let mut s = Sampler::new(2);
        let est = monotonicity_probe(&p, &mut s, &Vector::zeros(4), 1.0, 200).unwrap();
        assert!(est.abs() < 1e-12);
    }

    #[test]
    fn single_datapoint_saddle() {
        let data = LogisticSaddleData {
            a: Matrix::from_element(1, 1, 1.0),
            b: Matrix::from_element(1, 1, 1.0),
            coupling: Matrix::zeros(1, 1),
            lambda: 0.0,
        };
        let f = data.operator_value(&Vector::zeros(2));
        assert_eq!(f, Vector::from_column_slice(&[-0.5, -0.5]));
    }

    #[test]
    fn saddle_operator_is_the_gradient_field() {
        let data = LogisticSaddleData::generate(7, 20, 30, 4, 6, 0.1).unwrap();
        let mut s = Sampler::new(9);
        for _ in 0..5 {
            let u = s.normal_vector(10);
            let f = data.operator_value(&u);
            let h = 1e-6;
            for i in 0..10 {
                let mut up = u.clone();
                let mut um = u.clone();
                up[i] += h;
                um[i] -= h;
                let g = (data.saddle_value(&up) - data.saddle_value(&um)) / (2.0 * h);
                let expected = if i < 4 { g } else { -g };
                assert!((f[i] - expected).abs() < 1e-6, "{i}: {} vs {}", f[i], expected);
            }
        }
    }

    #[test]
    fn saddle_shape_and_jacobian() {
        let data = LogisticSaddleData::generate(1, 100, 100, 25, 50, 1.0).unwrap();
        let p = data.to_problem(0.3).unwrap();
        assert_eq!(p.dim(), 75);
        assert_eq!(p.mu, 1.0);
        let mut s = Sampler::new(4);
        for _ in 0..5 {
            let u = s.normal_vector(75);
            assert!(jacobian_consistency(&p, &u).unwrap() <= 1e-5);
            let j = p.jacobian(&u).unwrap();
            assert!(j.singular_values().max() <= p.l1);
        }
    }

    #[test]
    fn data_order_is_fixed() {
        let data = LogisticSaddleData::generate(11, 2, 3, 2, 2, 0.0).unwrap();
        let mut s = Sampler::new(11);
        let first: Vec<f64> = (0..4).map(|_| s.standard_normal()).collect();
        assert_eq!(data.a.row(0)[0], first[0]);
        assert_eq!(data.a.row(0)[1], first[1]);
        assert_eq!(data.a.row(1)[0], first[2]);
        let _b: Vec<f64> = (0..6).map(|_| s.standard_normal()).collect();
        assert_eq!(data.coupling[(0, 0)], s.standard_normal());
        assert_eq!(data.coupling[(0, 1)], s.standard_normal());
    }

    #[test]
    fn composite_demo_parts() {
        let comp = composite_demo(3, 5, FeasibleSet::whole_space(5)).unwrap();
        let x = Vector::from_fn(5, |i, _| 0.1 * i as f64);
        let jg = comp.g.jacobian(&x).unwrap();
        let fd = finite_difference_jacobian(comp.g.as_ref(), &x);
        assert!((jg - fd).norm() < 1e-6);
        let p = composite_demo_problem(3, 5, FeasibleSet::whole_space(5)).unwrap();
        assert!(jacobian_consistency(&p, &x).unwrap() <= 1e-5);
    }
}
