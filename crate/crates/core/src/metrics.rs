//! Convergence measurements computed from problems and recorded traces.
//!
//! Nothing here runs inside a solver loop except [`natural_residual`], which
//! is the termination test.

use crate::error::{check_dim, Error, Result};
use crate::problem::VIProblem;
use crate::rng::Sampler;
use crate::sets::SetKind;
use crate::trace::{ConvergenceTrace, StepKind};
use crate::Vector;

/// `||F(x)||`.
pub fn residual_norm(problem: &VIProblem, x: &Vector) -> Result<f64> {
    Ok(problem.eval_operator(x)?.norm())
}

/// `||x - P_X(x - F(x))||`. Equals `||F(x)||` on the whole space.
pub fn natural_residual(problem: &VIProblem, x: &Vector) -> Result<f64> {
    let fx = problem.eval_operator(x)?;
    Ok(natural_residual_with(problem, x, &fx))
}

pub(crate) fn natural_residual_with(problem: &VIProblem, x: &Vector, fx: &Vector) -> f64 {
    if problem.set().is_whole_space() {
        return fx.norm();
    }
    let mut z = x - fx;
    problem.set().project_mut(&mut z);
    (x - z).norm()
}

/// Sampled lower bound on the gap `max_{x in X} <F(x), x_bar - x>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritEstimate {
    pub value: f64,
    pub n_samples: usize,
    /// Always true: the estimate never exceeds the true merit.
    pub is_lower_bound: bool,
}

/// `max <F(x), x_bar - x>` over the given candidates (and `x_bar` itself, which contributes 0).
pub fn merit_over_candidates<'a>(
    problem: &VIProblem,
    x_bar: &Vector,
    candidates: impl IntoIterator<Item = &'a Vector>,
) -> f64 {
    candidates
        .into_iter()
        .map(|x| problem.eval(x).dot(&(x_bar - x)))
        .fold(0.0, f64::max)
}

/// Deterministic extreme points used by [`merit_estimate`]: box vertices when
/// there are at most `2^10`, otherwise the `2n` axis-extreme points; for a ball
/// the two boundary points along `F(x_bar)`.
pub fn extreme_candidates(problem: &VIProblem, x_bar: &Vector) -> Vec<Vector> {
    match problem.set().kind() {
        SetKind::Box { lower, upper } => {
            let n = lower.len();
            if n <= 10 {
                (0..1usize << n)
                    .map(|mask| Vector::from_fn(n, |i, _| if mask >> i & 1 == 1 { upper[i] } else { lower[i] }))
                    .collect()
            } else {
                let mid = (lower + upper) / 2.0;
                let mut out = Vec::with_capacity(2 * n);
                for i in 0..n {
                    for bound in [lower[i], upper[i]] {
                        let mut v = mid.clone();
                        v[i] = bound;
                        out.push(v);
                    }
                }
                out
            }
        }
        SetKind::Ball { center, radius } => {
            let f = problem.eval(x_bar);
            let norm = f.norm();
            if norm == 0.0 {
                return vec![center.clone()];
            }
            let dir = f * (*radius / norm);
            vec![center + &dir, center - &dir]
        }
        SetKind::WholeSpace | SetKind::NonnegativeOrthant => Vec::new(),
    }
}

/// Merit of `x_bar` estimated from `n_samples` uniform points of the set plus
/// the extreme candidates and `x_bar` itself.
///
/// Samples are drawn before anything else touches the sampler, so the same
/// seed with more samples gives a superset of candidates and a value at least
/// as large.
pub fn merit_estimate(
    problem: &VIProblem,
    x_bar: &Vector,
    sampler: &mut Sampler,
    n_samples: usize,
) -> Result<MeritEstimate> {
    check_dim(problem.dim(), x_bar.len())?;
    let mut samples = Vec::with_capacity(n_samples);
    match problem.set().kind() {
        SetKind::Box { lower, upper } if problem.set().is_bounded() => {
            for _ in 0..n_samples {
                samples.push(sampler.point_in_box(lower, upper));
            }
        }
        SetKind::Ball { center, radius } => {
            for _ in 0..n_samples {
                samples.push(sampler.point_in_ball(center, *radius));
            }
        }
        _ => return Err(Error::UnboundedSet),
    }
    samples.extend(extreme_candidates(problem, x_bar));
    Ok(MeritEstimate {
        value: merit_over_candidates(problem, x_bar, &samples),
        n_samples,
        is_lower_bound: true,
    })
}

/// Least-squares fit of `log(value)` against `log(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_used: usize,
    /// Points inside the window dropped because their value was not positive.
    pub n_trimmed: usize,
}

/// Log-log slope of a `(k, value)` series over `k_lo <= k <= k_hi`.
pub fn slope_estimate(series: &[(usize, f64)], k_lo: usize, k_hi: usize) -> Result<SlopeFit> {
    if k_lo < 1 || k_hi <= k_lo {
        return Err(Error::Config(format!("invalid slope window [{k_lo}, {k_hi}]")));
    }
    let window: Vec<_> = series.iter().filter(|(k, _)| (k_lo..=k_hi).contains(k)).collect();
    let pts: Vec<(f64, f64)> = window
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|(k, v)| ((*k as f64).ln(), v.ln()))
        .collect();
    let n_trimmed = window.len() - pts.len();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} positive points in window [{k_lo}, {k_hi}]",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all points share one k".into()));
    }
    let slope = sxy / sxx;
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        n_used: pts.len(),
        n_trimmed,
    })
}

/// Coefficient of determination of a straight-line fit of `y` against `x`.
pub fn linear_fit_r2(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

/// `(k, residual)` pairs of a trace.
pub fn residual_series(trace: &ConvergenceTrace) -> Vec<(usize, f64)> {
    trace.records.iter().map(|r| (r.k, r.residual)).collect()
}

/// Local order ratios `log e_{k+1} / log e_k` over consecutive AR steps, where
/// `e_k = ||x_k - x*||`.
///
/// Only steps with `e_k < 1` and `e_{k+1} > 1e-12` are used; the trace must
/// have been recorded with iterates.
pub fn superlinear_order_estimate(trace: &ConvergenceTrace, x_star: &Vector) -> Result<Vec<f64>> {
    let mut ratios = Vec::new();
    for rec in trace.records.iter().filter(|r| r.step_kind == StepKind::Ar) {
        let (Some(x), Some(x_next)) = (&rec.x, &rec.x_next) else {
            return Err(Error::InsufficientData("trace was recorded without iterates".into()));
        };
        let e = (x - x_star).norm();
        let e_next = (x_next - x_star).norm();
        if e < 1.0 && e > 0.0 && e_next > 1e-12 {
            ratios.push(e_next.ln() / e.ln());
        }
    }
    if ratios.len() < 2 {
        return Err(Error::InsufficientData(format!("{} usable AR steps", ratios.len())));
    }
    Ok(ratios)
}

/// Length of the longest run of consecutive entries `>= threshold`.
pub fn longest_run_at_least(values: &[f64], threshold: f64) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for v in values {
        cur = if *v >= threshold { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AffineOperator, FnOperator};
    use crate::sets::FeasibleSet;
    use crate::trace::TraceRecord;
    use crate::Matrix;
    use std::sync::Arc;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn constant_field(c: Vector, set: FeasibleSet) -> VIProblem {
        let n = c.len();
        let op = AffineOperator::new(Matrix::zeros(n, n), c).unwrap();
        VIProblem::new("const", Arc::new(op), set).unwrap()
    }

    #[test]
    fn residuals() {
        let id = VIProblem::new(
            "id",
            Arc::new(FnOperator::new(2, |x: &Vector| x.clone())),
            FeasibleSet::whole_space(2),
        )
        .unwrap();
        assert_eq!(residual_norm(&id, &v(&[3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(natural_residual(&id, &v(&[3.0, 4.0])).unwrap(), 5.0);

        let push_left = constant_field(v(&[1.0]), FeasibleSet::cube(1, 0.0, 1.0).unwrap());
        assert_eq!(natural_residual(&push_left, &v(&[0.0])).unwrap(), 0.0);
        assert_eq!(natural_residual(&push_left, &v(&[0.5])).unwrap(), 0.5);
    }

    /// Exact merit of a constant field on a box by vertex enumeration.
    fn exact_constant_merit(c: &Vector, lower: &Vector, upper: &Vector, x_bar: &Vector) -> f64 {
        let n = c.len();
        (0..1usize << n)
            .map(|mask| {
                let x = Vector::from_fn(n, |i, _| if mask >> i & 1 == 1 { upper[i] } else { lower[i] });
                c.dot(&(x_bar - x))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn merit_is_exact_for_constant_fields_on_boxes() {
        let mut s = Sampler::new(9);
        for n in [1usize, 3, 6, 10] {
            let c = s.normal_vector(n);
            let lower = Vector::from_fn(n, |i, _| -1.0 - 0.1 * i as f64);
            let upper = Vector::from_fn(n, |i, _| 0.5 + 0.2 * i as f64);
            let set = FeasibleSet::boxed(lower.clone(), upper.clone()).unwrap();
            let p = constant_field(c.clone(), set);
            let x_bar = s.point_in_box(&lower, &upper);
            let est = merit_estimate(&p, &x_bar, &mut s, 50).unwrap();
            let exact = exact_constant_merit(&c, &lower, &upper, &x_bar);
            assert!(est.value <= exact + 1e-12);
            assert!((est.value - exact).abs() <= 1e-10, "n={n}: {} vs {exact}", est.value);
        }
    }

    #[test]
    fn merit_nested_samples_never_decrease() {
        let a = Matrix::from_row_slice(2, 2, &[0.5, 1.0, -1.0, 0.5]);
        let op = AffineOperator::new(a, v(&[0.2, -0.4])).unwrap();
        let p = VIProblem::new("a", Arc::new(op), FeasibleSet::ball(Vector::zeros(2), 2.0).unwrap()).unwrap();
        let x_bar = v(&[0.3, 0.1]);
        let mut last = f64::NEG_INFINITY;
        for n in [1, 10, 100, 1000] {
            let m = merit_estimate(&p, &x_bar, &mut Sampler::new(4), n).unwrap().value;
            assert!(m >= last);
            last = m;
        }
        let unbounded = constant_field(v(&[1.0]), FeasibleSet::whole_space(1));
        assert!(matches!(
            merit_estimate(&unbounded, &v(&[0.0]), &mut Sampler::new(1), 5),
            Err(Error::UnboundedSet)
        ));
    }

    #[test]
    fn slope_of_power_law_is_exact() {
        let series: Vec<_> = (1..=2000).map(|k| (k, (k as f64).powf(-1.5))).collect();
        let fit = slope_estimate(&series, 10, 1000).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-9);
        assert_eq!(fit.n_used, 991);
    }

    #[test]
    fn slope_of_geometric_decay_steepens() {
        let series: Vec<_> = (1..=400).map(|k| (k, 3.0 * 0.9f64.powi(k as i32))).collect();
        let early = slope_estimate(&series, 5, 20).unwrap().slope;
        let late = slope_estimate(&series, 100, 400).unwrap().slope;
        assert!(late < early);
        assert!(late < -3.0);
    }

    #[test]
    fn slope_trims_nonpositive_values() {
        let series = vec![(1, 1.0), (2, 0.0), (3, -1.0), (4, 1.0 / 16.0)];
        let fit = slope_estimate(&series, 1, 4).unwrap();
        assert_eq!(fit.n_trimmed, 2);
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(slope_estimate(&series, 2, 3).is_err());
    }

    fn synthetic_ar_trace(errors: &[f64]) -> ConvergenceTrace {
        let mut t = ConvergenceTrace::default();
        for (i, w) in errors.windows(2).enumerate() {
            t.records.push(TraceRecord {
                k: i + 1,
                epoch: 1,
                x: Some(v(&[w[0]])),
                x_half: Some(v(&[w[1]])),
                x_next: Some(v(&[w[1]])),
                step_norm: w[0] - w[1],
                gamma_k: w[0] - w[1],
                step_kind: StepKind::Ar,
                residual: w[1],
                inner_iters: 0,
                inner_residual: 0.0,
                wall_ns: 0,
            });
        }
        t
    }

    #[test]
    fn order_estimates_on_synthetic_sequences() {
        let quad: Vec<f64> = std::iter::successors(Some(0.5f64), |e| Some(e * e)).take(6).collect();
        let r = superlinear_order_estimate(&synthetic_ar_trace(&quad), &v(&[0.0])).unwrap();
        assert!(r.iter().all(|q| (q - 2.0).abs() < 1e-12), "{r:?}");

        let three_halves: Vec<f64> = std::iter::successors(Some(0.5f64), |e| Some(e.powf(1.5))).take(8).collect();
        let r = superlinear_order_estimate(&synthetic_ar_trace(&three_halves), &v(&[0.0])).unwrap();
        assert!(r.iter().all(|q| (q - 1.5).abs() < 1e-12), "{r:?}");

        assert!(superlinear_order_estimate(&synthetic_ar_trace(&[0.5, 0.25]), &v(&[0.0])).is_err());
        assert_eq!(longest_run_at_least(&[2.0, 1.0, 1.9, 1.8, 2.5, 0.0], 1.8), 3);
    }
}
