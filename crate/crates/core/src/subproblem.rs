//! Solvers for the regularized subproblem
//!
//! ```text
//! find x in X:  <F~(x; a) + M ||x - a||^{p-1} (x - a), z - x> >= 0  for all z in X
//! ```
//!
//! where `a` is the anchor (the current outer iterate). Four strategies are
//! provided:
//!
//! * [`newton_lambda`]: unconstrained, affine model. Writes the solution as
//!   `x(lambda) = a - (J + lambda I)^{-1} F(a)` and solves the scalar equation
//!   `lambda = M ||x(lambda) - a||` by Newton's method on
//!   `lambda^2 - M^2 ||x(lambda) - a||^2`, safeguarded by a sign bracket of
//!   `phi(lambda) = lambda - M ||x(lambda) - a||`.
//! * [`bisection_lambda`]: affine model on any set. Each `x(lambda)` is a
//!   linear VI; `lambda` is located by bisection in log-space, first until the
//!   two-sided condition `(M/2) ||x - a|| <= lambda <= 2 M ||x - a||` holds and
//!   then until `phi` vanishes.
//! * [`ss2_loop`]: splits the operator into the affine part `H` and the
//!   regularizer `G` and runs the first-order ARE iteration on that split.
//!   Each inner step is two projections plus a scalar root.
//! * [`inner_eg`]: extra-gradient with backtracking on the full regularized
//!   operator, restricted to a trust region around the anchor.
//!
//! For `p = 1` the regularizer is linear, so every strategy with an affine
//! model reduces to one linear VI with `lambda = M`.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::oracle::{AffineModel, ApproximationOracle};
use crate::sets::{FeasibleSet, SetKind};
use crate::{Matrix, Vector};

/// Inner-iteration budget used when an instance does not set one.
pub const DEFAULT_INNER_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    NewtonLambda,
    BisectionLambda,
    Ss2,
    InnerEg,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::NewtonLambda,
        Strategy::BisectionLambda,
        Strategy::Ss2,
        Strategy::InnerEg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::NewtonLambda => "newton-lambda",
            Strategy::BisectionLambda => "bisection-lambda",
            Strategy::Ss2 => "ss2",
            Strategy::InnerEg => "inner-eg",
        }
    }

    /// A strategy that applies to `oracle` on `set`.
    pub fn default_for(oracle: &ApproximationOracle, set: &FeasibleSet) -> Strategy {
        match oracle.kind_name() {
            "taylor-1" | "taylor-2" if set.is_whole_space() => Strategy::NewtonLambda,
            "taylor-1" | "taylor-2" => Strategy::BisectionLambda,
            _ => Strategy::InnerEg,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subproblem strategy `{s}`")))
    }
}

/// One regularized subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemInstance<'a> {
    pub oracle: &'a ApproximationOracle,
    pub anchor: &'a Vector,
    /// Regularization constant `M`.
    pub reg: f64,
    pub set: &'a FeasibleSet,
    pub p: usize,
    pub max_inner: usize,
}

impl<'a> SubproblemInstance<'a> {
    pub fn new(oracle: &'a ApproximationOracle, anchor: &'a Vector, reg: f64, set: &'a FeasibleSet) -> Self {
        Self {
            oracle,
            anchor,
            reg,
            set,
            p: oracle.order(),
            max_inner: DEFAULT_INNER_BUDGET,
        }
    }

    fn validate(&self) -> Result<()> {
        check_dim(self.set.dim(), self.anchor.len())?;
        if !(self.reg > 0.0) || !self.reg.is_finite() {
            return Err(Error::Config(format!("regularization constant must be positive, got {}", self.reg)));
        }
        if self.p == 0 {
            return Err(Error::UnsupportedOrder(0));
        }
        let tol = 1e-9 * (1.0 + self.anchor.norm());
        if !self.set.contains(self.anchor, tol) {
            return Err(Error::Config("subproblem anchor is not feasible".into()));
        }
        Ok(())
    }

    /// `F~(x; a) + M ||x - a||^{p-1} (x - a)`.
    pub fn regularized_operator(&self, x: &Vector) -> Vector {
        let d = x - self.anchor;
        let scale = self.reg * d.norm().powi(self.p as i32 - 1);
        self.oracle.evaluate(x, self.anchor) + d * scale
    }

    /// Natural residual `||x - P_X(x - Phi(x))||` of the regularized operator.
    pub fn certificate(&self, x: &Vector) -> f64 {
        let phi = self.regularized_operator(x);
        natural_residual(self.set, x, &phi)
    }

    fn lambda_of(&self, x: &Vector) -> f64 {
        self.reg * (x - self.anchor).norm().powi(self.p as i32 - 1)
    }

    fn anchor_solution(&self) -> LambdaSolve {
        LambdaSolve {
            lambda: 0.0,
            x_half: self.anchor.clone(),
            inner_iters: 0,
            residual: self.certificate(self.anchor),
            accepted_at: Some(0),
        }
    }
}

/// Result of a subproblem solve.
#[derive(Debug, Clone)]
pub struct LambdaSolve {
    /// Regularization weight of the returned point, `M ||x_half - a||^{p-1}` at the solution.
    pub lambda: f64,
    pub x_half: Vector,
    pub inner_iters: usize,
    /// Natural residual of the regularized operator at `x_half`.
    pub residual: f64,
    /// Bisection iteration at which the two-sided `lambda` condition first held.
    pub accepted_at: Option<usize>,
}

fn natural_residual(set: &FeasibleSet, x: &Vector, phi: &Vector) -> f64 {
    if set.is_whole_space() {
        return phi.norm();
    }
    let mut z = x - phi;
    set.project_mut(&mut z);
    (x - z).norm()
}

/// `natural_residual <= tol`, where `tol` is raised to the rounding level
/// when it asks for more than double precision can deliver; `scale` bounds
/// the magnitude of the terms summed into `phi`.
fn meets(set: &FeasibleSet, x: &Vector, phi: &Vector, tol: f64, scale: f64) -> bool {
    let floor = 64.0 * f64::EPSILON * (x.norm() + scale);
    natural_residual(set, x, phi) <= tol.max(floor)
}

/// Solve the subproblem with the requested strategy.
pub fn solve_subproblem(instance: &SubproblemInstance<'_>, strategy: Strategy, tol: f64) -> Result<LambdaSolve> {
    instance.validate()?;
    if instance.p == 1 {
        if let Some(model) = instance.oracle.affine_model(instance.anchor) {
            return fixed_lambda_solve(instance, &model, tol);
        }
        if strategy != Strategy::InnerEg {
            log::debug!("p = 1 with a non-affine model: using inner-eg in place of {strategy}");
        }
        return inner_eg(instance, None, tol);
    }
    match strategy {
        Strategy::NewtonLambda => newton_lambda(instance, tol),
        Strategy::BisectionLambda => bisection_lambda(instance, tol),
        Strategy::Ss2 => ss2_loop(instance, tol),
        Strategy::InnerEg => inner_eg(instance, None, tol),
    }
}

fn require_affine(instance: &SubproblemInstance<'_>, strategy: Strategy) -> Result<AffineModel> {
    instance.oracle.affine_model(instance.anchor).ok_or_else(|| Error::StrategyMismatch {
        strategy: strategy.name(),
        reason: format!("needs an affine model, oracle is {}", instance.oracle.kind_name()),
    })
}

fn require_p2(instance: &SubproblemInstance<'_>, strategy: Strategy) -> Result<()> {
    if instance.p != 2 {
        return Err(Error::StrategyMismatch {
            strategy: strategy.name(),
            reason: format!("needs p = 2, got p = {}", instance.p),
        });
    }
    Ok(())
}

/// `p = 1` with an affine model: one linear VI with `lambda = M`.
fn fixed_lambda_solve(instance: &SubproblemInstance<'_>, model: &AffineModel, tol: f64) -> Result<LambdaSolve> {
    let lin = LinearVi::new(model, instance.anchor, instance.set);
    let (x, iters) = lin.solve(instance.reg, 0.1 * tol, instance.max_inner)?;
    Ok(LambdaSolve {
        lambda: instance.reg,
        residual: instance.certificate(&x),
        x_half: x,
        inner_iters: iters,
        accepted_at: Some(0),
    })
}

/// The linear VI `c + (B + lambda I)(x - a)` over a set.
struct LinearVi<'m> {
    c: &'m Vector,
    b: &'m Matrix,
    anchor: &'m Vector,
    set: &'m FeasibleSet,
}

impl<'m> LinearVi<'m> {
    fn new(model: &'m AffineModel, anchor: &'m Vector, set: &'m FeasibleSet) -> Self {
        Self {
            c: &model.value,
            b: &model.jacobian,
            anchor,
            set,
        }
    }

    fn shifted(&self, lambda: f64) -> Matrix {
        let mut m = self.b.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += lambda;
        }
        m
    }

    /// Unconstrained step `d = -(B + lambda I)^{-1} c`, `None` when singular.
    fn unconstrained_step(&self, lambda: f64) -> Option<(Vector, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)> {
        let lu = self.shifted(lambda).lu();
        let d = lu.solve(&(-self.c))?;
        d.iter().all(|v| v.is_finite()).then_some((d, lu))
    }

    /// Magnitude of the terms that make up the operator at `x`.
    fn scale(&self, shifted: &Matrix, x: &Vector) -> f64 {
        shifted.norm() * (x.norm() + self.anchor.norm()) + self.c.norm()
    }

    fn operator(&self, shifted: &Matrix, x: &Vector) -> Vector {
        self.c + shifted * (x - self.anchor)
    }

    /// Solution of the linear VI and the inner iterations spent.
    ///
    /// Direct on every built-in set: one LU solve on the whole space, an
    /// active-set Newton / Lemke pair on boxes and orthants, a multiplier
    /// search on balls. Projected extra-gradient with step `1 / ||B + lambda I||_2`
    /// is the fallback when the direct route does not reach `tol`.
    fn solve(&self, lambda: f64, tol: f64, budget: usize) -> Result<(Vector, usize)> {
        if self.set.is_whole_space() {
            let (d, _) = self.unconstrained_step(lambda).ok_or_else(|| Error::InnerBudget {
                iters: 0,
                residual: f64::INFINITY,
                best: self.anchor.clone(),
            })?;
            return Ok((self.anchor + d, 1));
        }
        let shifted = self.shifted(lambda);
        let lip = shifted.singular_values().max();
        if lip == 0.0 {
            let mut x = self.anchor - self.c;
            self.set.project_mut(&mut x);
            return Ok((x, 1));
        }
        let n = self.anchor.len();
        let direct = match self.set.kind() {
            SetKind::Box { lower, upper } => self.box_solve(lambda, &shifted, lower, upper, tol),
            SetKind::NonnegativeOrthant => {
                self.box_solve(lambda, &shifted, &Vector::zeros(n), &Vector::from_element(n, f64::INFINITY), tol)
            }
            SetKind::Ball { center, radius } => self.ball_multiplier(&shifted, center, *radius, tol),
            SetKind::WholeSpace => None,
        };
        if let Some((mut x, iters)) = direct {
            self.set.project_mut(&mut x);
            if meets(self.set, &x, &self.operator(&shifted, &x), tol, self.scale(&shifted, &x)) {
                return Ok((x, iters));
            }
        }
        let step = 1.0 / lip;
        let mut x = match self.unconstrained_step(lambda) {
            Some((d, _)) => self.anchor + d,
            None => self.anchor.clone(),
        };
        self.set.project_mut(&mut x);
        let mut best = (f64::INFINITY, x.clone());
        for it in 0..budget {
            let fx = self.operator(&shifted, &x);
            let res = natural_residual(self.set, &x, &fx);
            if res < best.0 {
                best = (res, x.clone());
            }
            if meets(self.set, &x, &fx, tol, self.scale(&shifted, &x)) {
                return Ok((x, it + 1));
            }
            let mut half = &x - &fx * step;
            self.set.project_mut(&mut half);
            let fh = self.operator(&shifted, &half);
            let mut next = &x - fh * step;
            self.set.project_mut(&mut next);
            x = next;
        }
        Err(Error::InnerBudget {
            iters: budget,
            residual: best.0,
            best: best.1,
        })
    }

    /// Box-constrained linear VI: active-set Newton from the projected
    /// unconstrained point, then Lemke's method (polished by one more active-set
    /// pass) when the active-set guesses cycle.
    fn box_solve(&self, lambda: f64, shifted: &Matrix, lower: &Vector, upper: &Vector, tol: f64) -> Option<(Vector, usize)> {
        let target = shifted * self.anchor - self.c;
        let mut x = match self.unconstrained_step(lambda) {
            Some((d, _)) => self.anchor + d,
            None => self.anchor.clone(),
        };
        self.set.project_mut(&mut x);
        let (start, spent) = match self.active_set(shifted, &target, lower, upper, x, tol) {
            Ok(found) => return Some(found),
            Err(spent) => (box_lcp(shifted, &target, lower, upper)?, spent),
        };
        match self.active_set(shifted, &target, lower, upper, start, tol) {
            Ok((x, iters)) => Some((x, iters + spent + 1)),
            Err(_) => None,
        }
    }

    /// Semismooth Newton on the natural map over a box: guess the active
    /// bounds from `x - Phi(x)`, fix them, and solve the free block exactly.
    /// `Err(iterations)` when the guesses stop improving.
    fn active_set(
        &self,
        shifted: &Matrix,
        target: &Vector,
        lower: &Vector,
        upper: &Vector,
        mut x: Vector,
        tol: f64,
    ) -> std::result::Result<(Vector, usize), usize> {
        let n = x.len();
        let mut seen: Vec<Vec<i8>> = Vec::new();
        for it in 0..4 * n + 20 {
            let g = shifted * &x - target;
            if meets(self.set, &x, &g, tol, self.scale(shifted, &x)) {
                return Ok((x, it + 1));
            }
            let z = &x - &g;
            let pattern: Vec<i8> = (0..n)
                .map(|i| {
                    if z[i] <= lower[i] {
                        -1
                    } else if z[i] >= upper[i] {
                        1
                    } else {
                        0
                    }
                })
                .collect();
            if seen.contains(&pattern) {
                return Err(it + 1);
            }
            let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 0).collect();
            let mut next = Vector::from_fn(n, |i, _| match pattern[i] {
                -1 => lower[i],
                1 => upper[i],
                _ => x[i],
            });
            if !free.is_empty() {
                let k = free.len();
                let sub = Matrix::from_fn(k, k, |r, c| shifted[(free[r], free[c])]);
                let rhs = Vector::from_fn(k, |r, _| {
                    let i = free[r];
                    let fixed: f64 = (0..n)
                        .filter(|&j| pattern[j] != 0)
                        .map(|j| shifted[(i, j)] * next[j])
                        .sum();
                    target[i] - fixed
                });
                let sol = sub.lu().solve(&rhs).ok_or(it + 1)?;
                for (r, &i) in free.iter().enumerate() {
                    next[i] = sol[r];
                }
            }
            if !next.iter().all(|v| v.is_finite()) {
                return Err(it + 1);
            }
            x = next;
            seen.push(pattern);
        }
        Err(4 * n + 20)
    }

    /// Ball constraint: either the unconstrained solution is inside, or the
    /// solution is `x(nu) = (A + nu I)^{-1}(A a - c + nu center)` with
    /// `||x(nu) - center|| = r` for a multiplier `nu > 0`, found by bisection.
    fn ball_multiplier(&self, shifted: &Matrix, center: &Vector, radius: f64, tol: f64) -> Option<(Vector, usize)> {
        let n = self.anchor.len();
        let target = shifted * self.anchor - self.c;
        let x_of = |nu: f64| -> Option<Vector> {
            let mut m = shifted.clone();
            for i in 0..n {
                m[(i, i)] += nu;
            }
            m.lu().solve(&(&target + center * nu))
        };
        let accept = |x: &Vector| {
            let g = shifted * x - &target;
            meets(self.set, x, &g, tol, self.scale(shifted, x))
        };
        let x0 = x_of(0.0)?;
        if (&x0 - center).norm() <= radius {
            return accept(&x0).then_some((x0, 1));
        }
        let excess = |nu: f64| x_of(nu).map(|x| (&x - center).norm() - radius);
        let mut hi = 1.0;
        let mut evals = 1;
        while excess(hi)? > 0.0 {
            hi *= 4.0;
            evals += 1;
            if evals > 200 {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            evals += 1;
            let x = x_of(mid)?;
            if accept(&x) {
                return Some((x, evals));
            }
            if mid <= lo || mid >= hi {
                break;
            }
            if (&x - center).norm() > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        None
    }
}

/// Solution of the box-constrained linear VI `0 in A x - t + N_[l,u](x)`
/// through the equivalent LCP. Unbounded coordinates are eliminated by a
/// Schur complement; a coordinate with only an upper bound is reflected.
fn box_lcp(a: &Matrix, target: &Vector, lower: &Vector, upper: &Vector) -> Option<Vector> {
    let n = a.nrows();
    let (bounded, free): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&i| lower[i].is_finite() || upper[i].is_finite());
    if !free.is_empty() {
        let pick = |rows: &[usize], cols: &[usize]| Matrix::from_fn(rows.len(), cols.len(), |r, c| a[(rows[r], cols[c])]);
        let sub = |idx: &[usize], v: &Vector| Vector::from_fn(idx.len(), |r, _| v[idx[r]]);
        let lu = pick(&free, &free).lu();
        let solve_ff = |rhs: &Vector| lu.solve(rhs);
        let t_f = sub(&free, target);
        let mut x = Vector::zeros(n);
        let x_b = if bounded.is_empty() {
            Vector::zeros(0)
        } else {
            let a_fb = pick(&free, &bounded);
            let a_bf = pick(&bounded, &free);
            let mut inv_fb = Matrix::zeros(free.len(), bounded.len());
            for j in 0..bounded.len() {
                inv_fb.set_column(j, &solve_ff(&a_fb.column(j).into_owned())?);
            }
            let schur = pick(&bounded, &bounded) - &a_bf * inv_fb;
            let t_b = sub(&bounded, target) - &a_bf * solve_ff(&t_f)?;
            box_lcp(&schur, &t_b, &sub(&bounded, lower), &sub(&bounded, upper))?
        };
        let a_fb = pick(&free, &bounded);
        let x_f = solve_ff(&(t_f - a_fb * &x_b))?;
        for (r, &i) in free.iter().enumerate() {
            x[i] = x_f[r];
        }
        for (r, &i) in bounded.iter().enumerate() {
            x[i] = x_b[r];
        }
        return Some(x);
    }
    let sign: Vec<f64> = (0..n).map(|i| if lower[i].is_finite() { 1.0 } else { -1.0 }).collect();
    let lo = Vector::from_fn(n, |i, _| if sign[i] > 0.0 { lower[i] } else { -upper[i] });
    let hi = Vector::from_fn(n, |i, _| if sign[i] > 0.0 { upper[i] } else { -lower[i] });
    let a_s = Matrix::from_fn(n, n, |i, j| sign[i] * sign[j] * a[(i, j)]);
    let t_s = Vector::from_fn(n, |i, _| sign[i] * target[i]);
    let capped: Vec<usize> = (0..n).filter(|&i| hi[i].is_finite()).collect();
    let size = n + capped.len();
    let mut m = Matrix::zeros(size, size);
    m.view_mut((0, 0), (n, n)).copy_from(&a_s);
    for (r, &i) in capped.iter().enumerate() {
        m[(i, n + r)] = 1.0;
        m[(n + r, i)] = -1.0;
    }
    let base = &a_s * &lo - &t_s;
    let q = Vector::from_fn(size, |i, _| if i < n { base[i] } else { hi[capped[i - n]] - lo[capped[i - n]] });
    let z = lemke(&m, &q, 50 * size + 100)?;
    Some(Vector::from_fn(n, |i, _| sign[i] * (lo[i] + z[i])))
}

/// Lemke's complementary pivoting for `w = M z + q >= 0, z >= 0, w^T z = 0`,
/// with covering vector `e`. Terminates for copositive-plus `M` whenever the
/// problem is feasible; `None` on ray termination or pivot budget.
fn lemke(m: &Matrix, q: &Vector, max_pivots: usize) -> Option<Vector> {
    let n = q.len();
    if q.iter().all(|&v| v >= 0.0) {
        return Some(Vector::zeros(n));
    }
    // columns: w (0..n), z (n..2n), z0 (2n); last column is the right-hand side
    let cols = 2 * n + 2;
    let mut t = Matrix::zeros(n, cols);
    for i in 0..n {
        t[(i, i)] = 1.0;
        for j in 0..n {
            t[(i, n + j)] = -m[(i, j)];
        }
        t[(i, 2 * n)] = -1.0;
        t[(i, cols - 1)] = q[i];
    }
    let mut basis: Vec<usize> = (0..n).collect();
    let pivot = |t: &mut Matrix, row: usize, col: usize| {
        let p = t[(row, col)];
        for c in 0..cols {
            t[(row, c)] /= p;
        }
        for r in 0..n {
            if r != row {
                let f = t[(r, col)];
                if f != 0.0 {
                    for c in 0..cols {
                        let v = t[(row, c)];
                        t[(r, c)] -= f * v;
                    }
                }
            }
        }
    };
    let row = (0..n).min_by(|&a, &b| q[a].total_cmp(&q[b]))?;
    pivot(&mut t, row, 2 * n);
    let mut leaving = basis[row];
    basis[row] = 2 * n;
    for _ in 0..max_pivots {
        let entering = if leaving < n { leaving + n } else { leaving - n };
        let scale = t.column(entering).amax().max(1.0);
        let mut best: Option<(usize, f64)> = None;
        for r in 0..n {
            let d = t[(r, entering)];
            if d > 1e-12 * scale {
                let ratio = t[(r, cols - 1)].max(0.0) / d;
                let better = match best {
                    None => true,
                    Some((b, br)) => {
                        ratio < br - 1e-14 * br.abs().max(1.0)
                            || (ratio <= br + 1e-14 * br.abs().max(1.0) && basis[r] == 2 * n && basis[b] != 2 * n)
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
        }
        let (r, _) = best?;
        pivot(&mut t, r, entering);
        leaving = basis[r];
        basis[r] = entering;
        if leaving == 2 * n {
            let mut z = Vector::zeros(n);
            for (r, &b) in basis.iter().enumerate() {
                if (n..2 * n).contains(&b) {
                    z[b - n] = t[(r, cols - 1)].max(0.0);
                }
            }
            return Some(z);
        }
    }
    None
}

/// Safeguarded Newton on `lambda^2 - M^2 ||x(lambda) - a||^2` (unconstrained, affine model).
pub fn newton_lambda(instance: &SubproblemInstance<'_>, tol: f64) -> Result<LambdaSolve> {
    instance.validate()?;
    let model = require_affine(instance, Strategy::NewtonLambda)?;
    if !instance.set.is_whole_space() {
        return Err(Error::StrategyMismatch {
            strategy: Strategy::NewtonLambda.name(),
            reason: "needs an unconstrained problem".into(),
        });
    }
    if instance.p == 1 {
        return fixed_lambda_solve(instance, &model, tol);
    }
    require_p2(instance, Strategy::NewtonLambda)?;
    let c_norm = model.value.norm();
    if c_norm == 0.0 {
        return Ok(instance.anchor_solution());
    }
    let m = instance.reg;
    let lin = LinearVi::new(&model, instance.anchor, instance.set);

    // phi(lambda) = lambda - M ||d(lambda)||; a singular shift counts as phi = -inf.
    let phi_at = |lambda: f64| -> f64 {
        match lin.unconstrained_step(lambda) {
            Some((d, _)) => lambda - m * d.norm(),
            None => f64::NEG_INFINITY,
        }
    };
    // For monotone J, ||d(lambda)|| <= ||c|| / lambda, so phi > 0 beyond sqrt(M ||c||).
    let mut hi = (m * c_norm).sqrt() * (1.0 + 1e-8);
    let mut expansions = 0;
    while phi_at(hi) <= 0.0 {
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Bracket { expansions });
        }
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    let mut lambda = hi;
    let mut best: Option<(f64, Vector, f64)> = None;
    let mut iters = 0;
    for it in 0..200 {
        iters = it + 1;
        let Some((d, lu)) = lin.unconstrained_step(lambda) else {
            lo = lambda;
            lambda = 0.5 * (lo + hi);
            continue;
        };
        let dn = d.norm();
        let phi = lambda - m * dn;
        if best.as_ref().map_or(true, |b| phi.abs() < b.0.abs()) {
            best = Some((phi, d.clone(), lambda));
        }
        // ||Phi(x(lambda))|| = |phi| * ||d||
        if phi.abs() * dn <= 0.01 * tol && phi.abs() <= 1e-3 * tol * (1.0 + lambda) {
            break;
        }
        if phi < 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        // f = lambda^2 - M^2 ||d||^2,  f' = 2 lambda + 2 M^2 d^T (J + lambda I)^{-1} d
        let f = lambda * lambda - m * m * dn * dn;
        let w = lu.solve(&d).unwrap_or_else(|| Vector::zeros(d.len()));
        let fprime = 2.0 * lambda + 2.0 * m * m * d.dot(&w);
        let newton = lambda - f / fprime;
        lambda = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo > 0.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * hi
        };
    }
    let (_, d, lambda) = best.expect("at least one Newton iterate is evaluated");
    let x_half = instance.anchor + d;
    Ok(LambdaSolve {
        lambda,
        residual: instance.certificate(&x_half),
        x_half,
        inner_iters: iters,
        accepted_at: None,
    })
}

/// Log-space bisection on `lambda` with a linear VI solve per trial value.
pub fn bisection_lambda(instance: &SubproblemInstance<'_>, tol: f64) -> Result<LambdaSolve> {
    instance.validate()?;
    let model = require_affine(instance, Strategy::BisectionLambda)?;
    if instance.p == 1 {
        return fixed_lambda_solve(instance, &model, tol);
    }
    require_p2(instance, Strategy::BisectionLambda)?;
    if natural_residual(instance.set, instance.anchor, &model.value) == 0.0 {
        return Ok(instance.anchor_solution());
    }
    let m = instance.reg;
    let lin = LinearVi::new(&model, instance.anchor, instance.set);
    let inner_tol = 0.01 * tol;
    let mut inner_iters = 0;
    let mut trial = |lambda: f64| -> Result<(Vector, f64)> {
        let (x, it) = lin.solve(lambda, inner_tol, instance.max_inner)?;
        inner_iters += it;
        let dn = (&x - instance.anchor).norm();
        Ok((x, dn))
    };

    let mut alpha_lo = tol.max(f64::MIN_POSITIVE);
    let (_, mut d_lo) = trial(alpha_lo)?;
    let mut expansions = 0;
    // lower end must satisfy lambda < M ||d(lambda)||
    while alpha_lo >= m * d_lo {
        if d_lo == 0.0 {
            return Ok(instance.anchor_solution());
        }
        expansions += 1;
        if expansions > 50 {
            return Err(Error::Bracket { expansions });
        }
        alpha_lo /= 10.0;
        d_lo = trial(alpha_lo)?.1;
    }
    let mut alpha_hi = m * d_lo.max(1.0);
    let mut expansions = 0;
    while alpha_hi <= m * trial(alpha_hi)?.1 {
        expansions += 1;
        if expansions > 50 {
            return Err(Error::Bracket { expansions });
        }
        alpha_hi *= 10.0;
    }

    let mut accepted_at = None;
    let mut best: Option<(f64, Vector, f64)> = None;
    for it in 1..=400 {
        let lambda = (alpha_lo * alpha_hi).sqrt();
        let (x, dn) = trial(lambda)?;
        let phi = lambda - m * dn;
        if accepted_at.is_none() && 0.5 * m * dn <= lambda && lambda <= 2.0 * m * dn {
            accepted_at = Some(it);
        }
        if best.as_ref().map_or(true, |b| phi.abs() < b.0.abs()) {
            best = Some((phi, x, lambda));
        }
        let done = accepted_at.is_some() && phi.abs() * dn.max(1.0) <= 0.1 * tol;
        if done || alpha_hi / alpha_lo - 1.0 <= 4.0 * f64::EPSILON {
            break;
        }
        if phi < 0.0 {
            alpha_lo = lambda;
        } else {
            alpha_hi = lambda;
        }
    }
    let (_, x_half, lambda) = best.expect("bisection evaluates at least one trial");
    Ok(LambdaSolve {
        lambda,
        residual: instance.certificate(&x_half),
        x_half,
        inner_iters,
        accepted_at,
    })
}

/// Maximizer over `tau >= 0` of `-(2/3) M tau^{3/2} - g^2 / (4 M tau + 2 l_h)`.
///
/// This is the scalar dual problem of the max-min reformulation of the cubic
/// inner step. The objective is concave; its stationarity condition
/// `M sqrt(tau) = 4 M g^2 / (4 M tau + 2 l_h)^2` is solved by bisection on
/// the sign of the derivative.
pub fn tau_star(g_norm: f64, m: f64, l_h: f64) -> f64 {
    if g_norm == 0.0 {
        return 0.0;
    }
    let deriv = |tau: f64| -m * tau.sqrt() + 4.0 * m * g_norm * g_norm / (4.0 * m * tau + 2.0 * l_h).powi(2);
    let mut hi = 1.0;
    while deriv(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    if l_h > 0.0 {
        // deriv(tau) < 0 once sqrt(tau) > g^2 / l_h^2
        hi = hi.min((g_norm * g_norm / (l_h * l_h)).powi(2) * 1.0001);
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scale `s >= 0` of the exact minimizer of the cubic model
/// `(M/3)||x - a||^3 + (l_h/2)||x - a||^2 + g^T (x - a)` over `X`:
/// `x(s) = P_X(a - g / (M s + l_h))` with `s = ||x(s) - a||`.
///
/// On the whole space `s` is the positive root of `M s^2 + l_h s = ||g||`.
pub fn cubic_scale(g: &Vector, m: f64, l_h: f64, set: &FeasibleSet, anchor: &Vector) -> f64 {
    let g_norm = g.norm();
    if g_norm == 0.0 {
        return 0.0;
    }
    let unconstrained = 2.0 * g_norm / (l_h + (l_h * l_h + 4.0 * m * g_norm).sqrt());
    if set.is_whole_space() {
        return unconstrained;
    }
    // s - ||x(s) - a|| is increasing and nonnegative at the unconstrained root.
    let dist = |s: f64| {
        let mut x = anchor - g / (m * s + l_h);
        set.project_mut(&mut x);
        (x - anchor).norm()
    };
    let (mut lo, mut hi) = (0.0, unconstrained);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid - dist(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// First-order ARE iteration on the split `H(x) = c + J (x - a)`,
/// `G(x) = M ||x - a|| (x - a)` with `l_h = ||J||_2`.
///
/// Each inner step forms `g_t = c + (J - l_h I)(xbar_t - a)`, takes the exact
/// minimizer of the cubic model as `xbar_{t+1/2}` (see [`cubic_scale`]), and
/// corrects with `xbar_{t+1} = P_X(xbar_t - Phi(xbar_{t+1/2}) / l_h)`.
pub fn ss2_loop(instance: &SubproblemInstance<'_>, tol: f64) -> Result<LambdaSolve> {
    instance.validate()?;
    let model = require_affine(instance, Strategy::Ss2)?;
    if instance.p == 1 {
        return fixed_lambda_solve(instance, &model, tol);
    }
    require_p2(instance, Strategy::Ss2)?;
    let (a, set, m) = (instance.anchor, instance.set, instance.reg);
    if natural_residual(set, a, &model.value) == 0.0 {
        return Ok(instance.anchor_solution());
    }
    let l_h = model.jacobian.singular_values().max();
    let mu_h = model.jacobian.symmetric_part().symmetric_eigenvalues().min();
    if mu_h <= 0.0 {
        log::warn!("ss2: affine part is not strongly monotone (min eigenvalue {mu_h:e}); inner linear rate not guaranteed");
    }
    let half_step = |xbar: &Vector| -> Vector {
        let g = &model.value + &model.jacobian * (xbar - a) - (xbar - a) * l_h;
        let s = cubic_scale(&g, m, l_h, set, a);
        let mut x = a - g / (m * s + l_h);
        set.project_mut(&mut x);
        x
    };
    if l_h == 0.0 {
        // H is constant, so one cubic step is exact.
        let x_half = half_step(a);
        return Ok(LambdaSolve {
            lambda: instance.lambda_of(&x_half),
            residual: instance.certificate(&x_half),
            x_half,
            inner_iters: 1,
            accepted_at: None,
        });
    }
    let mut xbar = a.clone();
    let mut best = (f64::INFINITY, a.clone());
    for t in 0..instance.max_inner {
        let x_half = half_step(&xbar);
        let phi = instance.regularized_operator(&x_half);
        let res = natural_residual(set, &x_half, &phi);
        if res < best.0 {
            best = (res, x_half.clone());
        }
        let mut next = &xbar - phi / l_h;
        set.project_mut(&mut next);
        let moved = (&next - &xbar).norm();
        xbar = next;
        if res <= tol || moved <= 1e-3 * tol {
            let x_half = best.1;
            return Ok(LambdaSolve {
                lambda: instance.lambda_of(&x_half),
                residual: best.0,
                x_half,
                inner_iters: t + 1,
                accepted_at: None,
            });
        }
    }
    Err(Error::InnerBudget {
        iters: instance.max_inner,
        residual: best.0,
        best: best.1,
    })
}

/// Projection onto `X ∩ B(a, r)` by Dykstra's alternating projections.
fn project_trust_region(set: &FeasibleSet, anchor: &Vector, radius: f64, z: &Vector) -> Vector {
    let ball = |v: &Vector| -> Vector {
        let d = v - anchor;
        let n = d.norm();
        if n <= radius {
            v.clone()
        } else {
            anchor + d * (radius / n)
        }
    };
    if set.is_whole_space() {
        return ball(z);
    }
    let pb = ball(z);
    if set.violation(&pb) == 0.0 {
        return pb;
    }
    let mut px = z.clone();
    set.project_mut(&mut px);
    if (&px - anchor).norm() <= radius {
        return px;
    }
    if let SetKind::Ball { .. } | SetKind::Box { .. } | SetKind::NonnegativeOrthant = set.kind() {
        let mut x = z.clone();
        let mut p_corr = Vector::zeros(z.len());
        let mut q_corr = Vector::zeros(z.len());
        for _ in 0..200 {
            let y = ball(&(&x + &p_corr));
            p_corr = &x + &p_corr - &y;
            let mut nx = &y + &q_corr;
            set.project_mut(&mut nx);
            q_corr = &y + &q_corr - &nx;
            let change = (&nx - &x).norm();
            x = nx;
            if change <= 1e-15 * (1.0 + x.norm()) {
                break;
            }
        }
        return x;
    }
    px
}

/// Extra-gradient with backtracking on the regularized operator over
/// `X ∩ B(a, r)`; the radius doubles whenever the iterate sits on the
/// trust-region boundary without having converged.
///
/// The default radius `(||F~(a; a)|| / M)^{1/p}` balances the regularizer
/// against the driving term.
pub fn inner_eg(instance: &SubproblemInstance<'_>, trust_radius: Option<f64>, tol: f64) -> Result<LambdaSolve> {
    instance.validate()?;
    let (a, set) = (instance.anchor, instance.set);
    let phi_a = instance.regularized_operator(a);
    if natural_residual(set, a, &phi_a) == 0.0 {
        return Ok(instance.anchor_solution());
    }
    let mut radius = trust_radius
        .unwrap_or_else(|| (phi_a.norm() / instance.reg).powf(1.0 / instance.p as f64))
        .max(1e-12);
    let mut x = a.clone();
    let mut fx = phi_a;
    let mut step = 1.0 / (instance.reg * (instance.p as f64) * radius.powi(instance.p as i32 - 1) + 1.0);
    let mut best = (f64::INFINITY, a.clone());
    for it in 0..instance.max_inner {
        let res = natural_residual(set, &x, &fx);
        if res < best.0 {
            best = (res, x.clone());
        }
        if res <= tol {
            return Ok(LambdaSolve {
                lambda: instance.lambda_of(&x),
                x_half: x,
                inner_iters: it,
                residual: res,
                accepted_at: None,
            });
        }
        if it % 50 == 49 && (&x - a).norm() >= radius * (1.0 - 1e-6) {
            radius *= 2.0;
        }
        let (half, f_half) = loop {
            let half = project_trust_region(set, a, radius, &(&x - &fx * step));
            let f_half = instance.regularized_operator(&half);
            let moved = (&half - &x).norm();
            if step * (&f_half - &fx).norm() <= 0.9 * moved || moved == 0.0 || step < 1e-300 {
                break (half, f_half);
            }
            step *= 0.5;
        };
        let _ = half;
        x = project_trust_region(set, a, radius, &(&x - f_half * step));
        fx = instance.regularized_operator(&x);
        step *= 1.2;
    }
    Err(Error::InnerBudget {
        iters: instance.max_inner,
        residual: best.0,
        best: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::taylor_oracle;
    use crate::problem::{AffineOperator, VIProblem};
    use std::sync::Arc;

    fn affine_problem(a: Matrix, b: Vector, set: FeasibleSet) -> VIProblem {
        VIProblem::new("affine", Arc::new(AffineOperator::new(a, b).unwrap()), set)
            .unwrap()
            .with_constants(1.0, 1.0, 0.0)
            .unwrap()
    }

    /// Bisection on phi(lambda) = lambda - g(lambda), independent of the solvers.
    fn bisect_fixed_point(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn scalar_diag_two() {
        let p = affine_problem(Matrix::from_element(1, 1, 2.0), Vector::zeros(1), FeasibleSet::whole_space(1));
        let o = taylor_oracle(&p, 2).unwrap();
        let anchor = Vector::from_element(1, 1.0);
        let inst = SubproblemInstance::new(&o, &anchor, 1.0, p.set());
        let oracle_lambda = bisect_fixed_point(|l| 2.0 / (2.0 + l), 0.0, 2.0);
        assert!((oracle_lambda - (3f64.sqrt() - 1.0)).abs() < 1e-14);

        let sol = newton_lambda(&inst, 1e-12).unwrap();
        assert!((sol.lambda - oracle_lambda).abs() < 1e-12);
        assert!((sol.x_half[0] - (1.0 - 2.0 / (2.0 + oracle_lambda))).abs() < 1e-12);
        assert!((sol.x_half[0] - 0.2679492).abs() < 1e-7);

        let bis = bisection_lambda(&inst, 1e-12).unwrap();
        assert!(0.5 * (bis.x_half[0] - 1.0).abs() <= bis.lambda);
        assert!(bis.lambda <= 2.0 * (bis.x_half[0] - 1.0).abs());
        assert!((bis.x_half[0] - sol.x_half[0]).abs() < 1e-10);

        let ss2 = ss2_loop(&inst, 1e-12).unwrap();
        assert!((ss2.x_half[0] - sol.x_half[0]).abs() < 1e-6);

        let eg = inner_eg(&inst, Some(10.0), 1e-12).unwrap();
        assert!((eg.x_half[0] - sol.x_half[0]).abs() < 1e-10);
    }

    #[test]
    fn skew_rotation_lambda() {
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let p = affine_problem(a, Vector::zeros(2), FeasibleSet::whole_space(2));
        let o = taylor_oracle(&p, 2).unwrap();
        let anchor = Vector::from_column_slice(&[1.0, 0.0]);
        let inst = SubproblemInstance::new(&o, &anchor, 1.0, p.set());
        let expected = bisect_fixed_point(|l| 1.0 / (1.0 + l * l).sqrt(), 0.0, 1.0);
        assert!((expected.powi(4) + expected.powi(2) - 1.0).abs() < 1e-14);
        assert!((expected - 0.7861514).abs() < 1e-7);
        let sol = newton_lambda(&inst, 1e-12).unwrap();
        assert!((sol.lambda - expected).abs() < 1e-10);
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn anchor_that_already_solves() {
        let p = affine_problem(Matrix::identity(2, 2), Vector::zeros(2), FeasibleSet::whole_space(2));
        let o = taylor_oracle(&p, 2).unwrap();
        let anchor = Vector::zeros(2);
        let inst = SubproblemInstance::new(&o, &anchor, 1.0, p.set());
        for st in Strategy::ALL {
            let sol = solve_subproblem(&inst, st, 1e-12).unwrap();
            assert_eq!(sol.lambda, 0.0, "{st}");
            assert_eq!(sol.x_half, anchor, "{st}");
        }
    }

    #[test]
    fn strategy_mismatches_are_reported() {
        let p = affine_problem(Matrix::identity(2, 2), Vector::from_element(2, 1.0), FeasibleSet::cube(2, -1.0, 1.0).unwrap());
        let o = taylor_oracle(&p, 2).unwrap();
        let anchor = Vector::zeros(2);
        let inst = SubproblemInstance::new(&o, &anchor, 1.0, p.set());
        assert!(matches!(newton_lambda(&inst, 1e-10), Err(Error::StrategyMismatch { .. })));

        let custom = ApproximationOracle::custom(2, 0.5, 1.0, |x: &Vector, _y: &Vector| x.clone()).unwrap();
        let inst = SubproblemInstance::new(&custom, &anchor, 1.0, p.set());
        assert!(matches!(ss2_loop(&inst, 1e-10), Err(Error::StrategyMismatch { .. })));
        assert!(inner_eg(&inst, None, 1e-10).is_ok());
    }

    #[test]
    fn tau_star_cases() {
        assert_eq!(tau_star(0.0, 1.0, 1.0), 0.0);
        assert!(tau_star(1.0, 1.0, 1e12) <= 1e-10);
        let expected = 0.25f64.powf(0.4);
        assert!((tau_star(1.0, 1.0, 0.0) - expected).abs() < 1e-12);
        assert!((expected - 0.5743492).abs() < 1e-7);
    }

    #[test]
    fn tau_star_matches_dense_scan() {
        let (m, l_h, g) = (1.0, 1.0, 1.0);
        let objective = |t: f64| -(2.0 / 3.0) * m * t.powf(1.5) - g * g / (4.0 * m * t + 2.0 * l_h);
        let (mut best_t, mut best_v) = (0.0, f64::NEG_INFINITY);
        let n = 1_000_000;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let v = objective(t);
            if v > best_v {
                best_v = v;
                best_t = t;
            }
        }
        assert!((tau_star(g, m, l_h) - best_t).abs() < 1e-6 + 1.0 / n as f64);
    }

    #[test]
    fn cubic_scale_solves_the_cubic_model() {
        let g = Vector::from_column_slice(&[3.0, -4.0]);
        let anchor = Vector::zeros(2);
        let whole = FeasibleSet::whole_space(2);
        let s = cubic_scale(&g, 2.0, 1.0, &whole, &anchor);
        assert!((2.0 * s * s + s - 5.0).abs() < 1e-12);

        let ball = FeasibleSet::ball(Vector::zeros(2), 0.5).unwrap();
        let s = cubic_scale(&g, 2.0, 1.0, &ball, &anchor);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn composite_split_with_quadratic_g_matches_closed_form() {
        use crate::oracle::composite_split_oracle;
        use crate::problem::{CompositeProblem, Operator};
        let h: Arc<dyn Operator> = Arc::new(
            AffineOperator::new(
                Matrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]),
                Vector::from_column_slice(&[1.0, -0.5]),
            )
            .unwrap(),
        );
        let q = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let g: Arc<dyn Operator> = Arc::new(AffineOperator::new(q.clone(), Vector::zeros(2)).unwrap());
        let comp = CompositeProblem::new(h.clone(), g, 2.0, FeasibleSet::whole_space(2)).unwrap();
        let o = composite_split_oracle(&comp);
        let anchor = Vector::from_column_slice(&[0.3, 0.7]);
        let m = 2.0;
        let inst = SubproblemInstance::new(&o, &anchor, m, &comp.set);
        let sol = solve_subproblem(&inst, Strategy::InnerEg, 1e-12).unwrap();
        // H(a) + Q x + M (x - a) = 0
        let closed = (&q + Matrix::identity(2, 2) * m)
            .lu()
            .solve(&(&anchor * m - h.eval(&anchor)))
            .unwrap();
        assert!((sol.x_half - closed).norm() < 1e-10);
    }

    #[test]
    fn regularizer_field_is_monotone() {
        use crate::problem::{finite_difference_jacobian, FnOperator};
        let anchor = Vector::from_column_slice(&[0.2, -0.1, 0.4]);
        let mut s = crate::rng::Sampler::new(17);
        for p in [2usize, 3] {
            let a = anchor.clone();
            let reg = FnOperator::new(3, move |x: &Vector| {
                let d = x - &a;
                let n = d.norm();
                d * (1.5 * n.powi(p as i32 - 1))
            });
            for _ in 0..50 {
                let x = s.point_in_ball(&anchor, 2.0);
                let jac = finite_difference_jacobian(&reg, &x);
                let min_eig = jac.symmetric_part().symmetric_eigenvalues().min();
                assert!(min_eig >= -1e-8, "p={p}: {min_eig}");
            }
        }
    }

    #[test]
    fn lemke_two_by_two() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let z = lemke(&m, &Vector::from_vec(vec![-5.0, -6.0]), 100).unwrap();
        assert!((z[0] - 4.0 / 3.0).abs() < 1e-12 && (z[1] - 7.0 / 3.0).abs() < 1e-12);
        let z = lemke(&m, &Vector::from_vec(vec![1.0, -4.0]), 100).unwrap();
        // z1 = 0 with w1 = z2 + 1 >= 0, z2 = 2
        assert!(z[0].abs() < 1e-12 && (z[1] - 2.0).abs() < 1e-12);
    }

    fn random_linear_vi(s: &mut crate::Sampler, n: usize) -> (Vector, Matrix, Vector) {
        let g = Matrix::from_fn(n, n / 2, |_, _| s.standard_normal());
        let k = Matrix::from_fn(n, n, |_, _| s.standard_normal());
        let b = &g * g.transpose() * 0.3 + (&k - k.transpose());
        (s.normal_vector(n) * 3.0, b, s.normal_vector(n) * 0.1)
    }

    #[test]
    fn direct_linear_solves_meet_tolerance_without_iterating() {
        let mut s = crate::Sampler::new(11);
        let n = 6;
        let sets = [
            FeasibleSet::cube(n, -1.0, 1.0).unwrap(),
            FeasibleSet::nonnegative_orthant(n),
            FeasibleSet::boxed(
                Vector::from_fn(n, |i, _| if i % 2 == 0 { f64::NEG_INFINITY } else { -0.5 }),
                Vector::from_fn(n, |i, _| if i % 3 == 0 { f64::INFINITY } else { 0.5 }),
            )
            .unwrap(),
            FeasibleSet::ball(Vector::from_element(n, 0.1), 0.7).unwrap(),
        ];
        for set in &sets {
            for _ in 0..25 {
                let (c, b, mut anchor) = random_linear_vi(&mut s, n);
                set.project_mut(&mut anchor);
                let vi = LinearVi { c: &c, b: &b, anchor: &anchor, set };
                for lambda in [1e-9, 1e-3, 1.0] {
                    let (x, _) = vi.solve(lambda, 1e-10, 0).unwrap_or_else(|e| panic!("{:?} lambda {lambda}: {e}", set.kind()));
                    assert!(set.contains(&x, 1e-12));
                    let fx = vi.operator(&vi.shifted(lambda), &x);
                    assert!(natural_residual(set, &x, &fx) <= 1e-10);
                }
            }
        }
    }
}
