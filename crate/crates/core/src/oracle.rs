//! Approximation oracles `F~(x; y)`.
//!
//! An oracle of order `p` satisfies
//!
//! ```text
//! ||F~(x; y) - F(x)|| <= tau * lp * ||x - y||^p
//! ```
//!
//! for every pair the solver queries. The ARE step only ever sees the oracle
//! through this bound, so new approximations plug in by implementing a model
//! and declaring `(p, tau, lp)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::problem::{CompositeProblem, Operator, VIProblem};
use crate::rng::Sampler;
use crate::{Matrix, Vector};

type PairFn = dyn Fn(&Vector, &Vector) -> Vector + Send + Sync;

#[derive(Clone)]
enum Model {
    /// `F(y)`.
    Taylor1(Arc<dyn Operator>),
    /// `F(y) + J(y) (x - y)`.
    Taylor2(Arc<dyn Operator>),
    /// `H(y) + G(x)`.
    CompositeSplit { h: Arc<dyn Operator>, g: Arc<dyn Operator> },
    Custom(Arc<PairFn>),
}

/// Affine oracle model at a fixed anchor: `F~(x; anchor) = value + jacobian (x - anchor)`.
#[derive(Debug, Clone)]
pub struct AffineModel {
    pub value: Vector,
    pub jacobian: Matrix,
}

impl AffineModel {
    pub fn eval(&self, x: &Vector, anchor: &Vector) -> Vector {
        &self.value + &self.jacobian * (x - anchor)
    }
}

#[derive(Clone)]
pub struct ApproximationOracle {
    model: Model,
    order: usize,
    tau: f64,
    lp: f64,
}

impl fmt::Debug for ApproximationOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApproximationOracle")
            .field("kind", &self.kind_name())
            .field("order", &self.order)
            .field("tau", &self.tau)
            .field("lp", &self.lp)
            .finish()
    }
}

impl ApproximationOracle {
    /// A user-supplied approximation with its declared bound constants.
    pub fn custom(
        order: usize,
        tau: f64,
        lp: f64,
        evaluate: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::validated(Model::Custom(Arc::new(evaluate)), order, tau, lp)
    }

    fn validated(model: Model, order: usize, tau: f64, lp: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::UnsupportedOrder(order));
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Config(format!("oracle tau must lie in (0, 1], got {tau}")));
        }
        if !(lp >= 0.0) || !lp.is_finite() {
            return Err(Error::Config(format!("oracle lp must be finite and nonnegative, got {lp}")));
        }
        Ok(Self { model, order, tau, lp })
    }

    /// `F~(x; anchor)`.
    pub fn evaluate(&self, x: &Vector, anchor: &Vector) -> Vector {
        match &self.model {
            Model::Taylor1(op) => op.eval(anchor),
            Model::Taylor2(op) => {
                let jac = op.jacobian(anchor).expect("taylor oracle built without a Jacobian");
                op.eval(anchor) + jac * (x - anchor)
            }
            Model::CompositeSplit { h, g } => h.eval(anchor) + g.eval(x),
            Model::Custom(f) => f(x, anchor),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lp(&self) -> f64 {
        self.lp
    }

    pub fn kind_name(&self) -> &'static str {
        match self.model {
            Model::Taylor1(_) => "taylor-1",
            Model::Taylor2(_) => "taylor-2",
            Model::CompositeSplit { .. } => "composite-split",
            Model::Custom(_) => "custom",
        }
    }

    /// The model at `anchor` when it is affine in `x` (Taylor oracles).
    pub fn affine_model(&self, anchor: &Vector) -> Option<AffineModel> {
        match &self.model {
            Model::Taylor1(op) => Some(AffineModel {
                value: op.eval(anchor),
                jacobian: Matrix::zeros(anchor.len(), anchor.len()),
            }),
            Model::Taylor2(op) => Some(AffineModel {
                value: op.eval(anchor),
                jacobian: op.jacobian(anchor)?,
            }),
            _ => None,
        }
    }
}

/// Taylor approximation of order `p in {1, 2}`.
///
/// `p = 1` gives `F(y)` with `tau = 1` against `l1`; `p = 2` gives
/// `F(y) + J(y)(x - y)` with `tau = 1/2` against `l2` (integral form of the
/// remainder).
pub fn taylor_oracle(problem: &VIProblem, p: usize) -> Result<ApproximationOracle> {
    let op = problem.operator().clone();
    match p {
        1 => ApproximationOracle::validated(Model::Taylor1(op), 1, 1.0, problem.l1),
        2 => {
            if !problem.has_jacobian() {
                return Err(Error::MissingJacobian(problem.name().to_string()));
            }
            ApproximationOracle::validated(Model::Taylor2(op), 2, 0.5, problem.l2)
        }
        other => Err(Error::UnsupportedOrder(other)),
    }
}

/// `F~(x; y) = H(y) + G(x)`: order 1, `tau = 1`, bounded by the Lipschitz
/// constant of `H` alone.
pub fn composite_split_oracle(problem: &CompositeProblem) -> ApproximationOracle {
    ApproximationOracle {
        model: Model::CompositeSplit {
            h: problem.h.clone(),
            g: problem.g.clone(),
        },
        order: 1,
        tau: 1.0,
        lp: problem.l_h,
    }
}

/// Outcome of [`verify_oracle_bound`].
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// `max ||F~(x;y) - F(x)|| - tau * lp * ||x-y||^p`; nonpositive when the bound held.
    pub max_violation: f64,
    pub worst_pair: (Vector, Vector),
    /// `max ||F~(x;y) - F(x)|| / (tau * ||x-y||^p)`: the smallest `lp` consistent with the samples.
    pub empirical_lp: f64,
    pub n_pairs: usize,
}

impl BoundReport {
    pub fn held(&self) -> bool {
        self.max_violation <= 0.0
    }
}

/// Sample pairs uniformly in a ball and measure the worst violation of the
/// oracle's declared bound.
pub fn verify_oracle_bound(
    oracle: &ApproximationOracle,
    problem: &VIProblem,
    sampler: &mut Sampler,
    center: &Vector,
    radius: f64,
    n_pairs: usize,
) -> Result<BoundReport> {
    check_dim(problem.dim(), center.len())?;
    if n_pairs == 0 {
        return Err(Error::Config("bound verification needs at least one pair".into()));
    }
    let p = oracle.order() as i32;
    let mut report = BoundReport {
        max_violation: f64::NEG_INFINITY,
        worst_pair: (center.clone(), center.clone()),
        empirical_lp: 0.0,
        n_pairs,
    };
    for _ in 0..n_pairs {
        let x = sampler.point_in_ball(center, radius);
        let y = sampler.point_in_ball(center, radius);
        let gap = (oracle.evaluate(&x, &y) - problem.eval(&x)).norm();
        let dist_p = (&x - &y).norm().powi(p);
        let violation = gap - oracle.tau() * oracle.lp() * dist_p;
        if dist_p > 0.0 {
            report.empirical_lp = report.empirical_lp.max(gap / (oracle.tau() * dist_p));
        }
        if violation > report.max_violation {
            report.max_violation = violation;
            report.worst_pair = (x, y);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AffineOperator, FnOperator};
    use crate::sets::FeasibleSet;

    fn scalar(f: fn(f64) -> f64, df: fn(f64) -> f64) -> VIProblem {
        let op = FnOperator::new(1, move |x: &Vector| Vector::from_element(1, f(x[0])))
            .with_jacobian(move |x: &Vector| Matrix::from_element(1, 1, df(x[0])));
        VIProblem::new("scalar", Arc::new(op), FeasibleSet::whole_space(1)).unwrap()
    }

    #[test]
    fn first_order_taylor_is_constant() {
        let p = scalar(|x| x, |_| 1.0).with_constants(1.0, 0.0, 1.0).unwrap();
        let o = taylor_oracle(&p, 1).unwrap();
        let y = Vector::from_element(1, 2.0);
        for x in [-3.0, 0.0, 5.0] {
            assert_eq!(o.evaluate(&Vector::from_element(1, x), &y)[0], 2.0);
        }
        assert_eq!((o.tau(), o.lp()), (1.0, 1.0));
    }

    #[test]
    fn second_order_taylor_of_cubic() {
        // scan L2 = max |6x| over the test interval [0, 2]
        let l2 = (0..=2000).map(|i| 6.0 * (i as f64 / 1000.0)).fold(0.0, f64::max);
        let p = scalar(|x| x * x * x, |x| 3.0 * x * x).with_constants(12.0, l2, 0.0).unwrap();
        let o = taylor_oracle(&p, 2).unwrap();
        let y = Vector::from_element(1, 1.0);
        let x = Vector::from_element(1, 1.5);
        let approx = o.evaluate(&x, &y)[0];
        assert!((approx - 2.5).abs() < 1e-15);
        let gap = (approx - 1.5f64.powi(3)).abs();
        assert!((gap - 0.875).abs() < 1e-15);
        assert!(gap <= 0.5 * l2 * 0.25);

        let mut s = Sampler::new(5);
        let report = verify_oracle_bound(&o, &p, &mut s, &Vector::from_element(1, 1.0), 1.0, 2000).unwrap();
        assert!(report.held(), "{report:?}");
    }

    #[test]
    fn second_order_taylor_is_exact_on_affine() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, -2.0, 0.5]);
        let op = AffineOperator::new(a, Vector::from_column_slice(&[1.0, -1.0])).unwrap();
        let p = VIProblem::new("affine", Arc::new(op), FeasibleSet::whole_space(2)).unwrap();
        let o = taylor_oracle(&p, 2).unwrap();
        let mut s = Sampler::new(2);
        let r = verify_oracle_bound(&o, &p, &mut s, &Vector::zeros(2), 3.0, 500).unwrap();
        assert!(r.max_violation <= 1e-10);
        assert!(r.empirical_lp <= 1e-10);
    }

    #[test]
    fn unsupported_orders_and_missing_jacobian() {
        let op = FnOperator::new(1, |x: &Vector| x.clone());
        let p = VIProblem::new("nojac", Arc::new(op), FeasibleSet::whole_space(1)).unwrap();
        assert!(matches!(taylor_oracle(&p, 3), Err(Error::UnsupportedOrder(3))));
        assert!(matches!(taylor_oracle(&p, 2), Err(Error::MissingJacobian(_))));
        assert!(taylor_oracle(&p, 1).is_ok());
    }

    #[test]
    fn composite_split_degenerate_cases() {
        let n = 2;
        let zero: Arc<dyn Operator> = Arc::new(FnOperator::new(n, move |_x: &Vector| Vector::zeros(n)));
        let g: Arc<dyn Operator> = Arc::new(FnOperator::new(n, |x: &Vector| x.norm() * x));
        let h: Arc<dyn Operator> = Arc::new(
            AffineOperator::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]), Vector::zeros(2)).unwrap(),
        );
        let x = Vector::from_column_slice(&[0.3, -0.7]);
        let y = Vector::from_column_slice(&[1.0, 2.0]);

        // H = 0: the oracle is F itself
        let c = CompositeProblem::new(zero.clone(), g.clone(), 0.0, FeasibleSet::whole_space(n)).unwrap();
        let o = composite_split_oracle(&c);
        let f = c.to_problem("g").unwrap();
        assert!((o.evaluate(&x, &y) - f.eval(&x)).norm() == 0.0);

        // G = 0: the first-order Taylor oracle of H
        let c = CompositeProblem::new(h.clone(), zero, 1.0, FeasibleSet::whole_space(n)).unwrap();
        let o = composite_split_oracle(&c);
        assert_eq!(o.evaluate(&x, &y), h.eval(&y));
        assert_eq!((o.order(), o.tau(), o.lp()), (1, 1.0, 1.0));
    }
}
