//! End-to-end acceptance checks. Each check builds its own instances, runs
//! the solvers and returns a verdict with the numbers it judged; the
//! `acceptance` test target runs them in order and prints one line apiece.
//!
//! Traces produced by the solver checks are kept in a [`Ledger`] so the
//! trace-consistency part of the property check can audit every one of them.

use std::path::Path;
use std::sync::Mutex;

use anyhow::{anyhow, ensure, Context};
use are_bench::config::{BenchmarkSpec, MethodSpec};
use are_bench::suite::{are_config, build_instance, first_order_config};
use are_vi::are::{self, epoch_length};
use are_vi::first_order::run_first_order;
use are_vi::metrics::{longest_run_at_least, merit_estimate, slope_estimate, superlinear_order_estimate};
use are_vi::oracle::{composite_split_oracle, taylor_oracle, verify_oracle_bound};
use are_vi::problem::jacobian_consistency;
use are_vi::problems::{self, AffineSpec, LogisticSaddleData};
use are_vi::subproblem::{bisection_lambda, inner_eg, newton_lambda, ss2_loop};
use are_vi::{
    AREConfig, ConvergenceTrace, FeasibleSet, FirstOrderMethod, Matrix, Sampler, StepKind, SubproblemInstance,
    VIProblem, Vector,
};

/// Seed shared by every generated instance.
pub const SEED: u64 = 20240601;

#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

/// A trace worth auditing, with the regularization constant and order that produced it.
pub struct Audited {
    pub label: String,
    pub trace: ConvergenceTrace,
    pub reg: f64,
    pub p: usize,
}

/// Traces collected while the checks run.
#[derive(Default)]
pub struct Ledger(Mutex<Vec<Audited>>);

impl Ledger {
    fn keep(&self, label: impl Into<String>, trace: &ConvergenceTrace, reg: f64, p: usize) {
        self.0.lock().expect("ledger lock").push(Audited {
            label: label.into(),
            trace: trace.clone(),
            reg,
            p,
        });
    }
}

pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub run: fn(&Ledger) -> anyhow::Result<Verdict>,
}

pub const CHECKS: [Check; 8] = [
    Check { id: 1, name: "saddle-point suite ordering", run: suite_ordering },
    Check { id: 2, name: "sublinear merit rate", run: merit_rate },
    Check { id: 3, name: "local superlinear order", run: local_order },
    Check { id: 4, name: "epoch contraction", run: epoch_contraction },
    Check { id: 5, name: "subproblem strategy agreement", run: strategy_agreement },
    Check { id: 6, name: "lambda fixed-point certificates", run: lambda_certificates },
    Check { id: 7, name: "extra-gradient condition scaling", run: eg_scaling },
    Check { id: 8, name: "property suites", run: properties },
];

fn saddle_spec(lambda: f64, tol: f64) -> BenchmarkSpec {
    BenchmarkSpec {
        lambda,
        tol,
        seed: SEED,
        ..BenchmarkSpec::default()
    }
}

/// Run `method` exactly as the bench does, but with iterates stored.
fn run_saddle(ledger: &Ledger, spec: &BenchmarkSpec, method: MethodSpec) -> anyhow::Result<ConvergenceTrace> {
    let problem = build_instance(spec)?.problem;
    let x0 = problem.set().anchor_point();
    let fo = match method {
        MethodSpec::Eg => Some(FirstOrderMethod::Extragradient),
        MethodSpec::Ogda => Some(FirstOrderMethod::Ogda),
        MethodSpec::Projection => Some(FirstOrderMethod::Projection),
        _ => None,
    };
    if let Some(fo) = fo {
        let cfg = first_order_config(spec, fo, problem.l1)?;
        return Ok(run_first_order(&problem, &cfg, &x0)?);
    }
    let cfg = AREConfig {
        store_iterates: true,
        ..are_config(spec)
    };
    let oracle = taylor_oracle(&problem, spec.p)?;
    let trace = match method {
        MethodSpec::Are => are::run_are(&problem, &oracle, &cfg, &x0)?,
        MethodSpec::AreRestart => are::run_are_restart(&problem, &oracle, &cfg, &x0)?,
        _ => are::run_algorithm1(&problem, &oracle, &cfg, &x0)?,
    };
    ledger.keep(format!("{} lambda={}", method.name(), spec.lambda), &trace, cfg.reg(&oracle)?, spec.p);
    Ok(trace)
}

fn suite_ordering(ledger: &Ledger) -> anyhow::Result<Verdict> {
    let mut passed = true;
    let mut notes = Vec::new();
    for lambda in [1.0, 0.1] {
        let spec = saddle_spec(lambda, 1e-10);
        let reached = |m: MethodSpec| -> anyhow::Result<Option<usize>> {
            Ok(run_saddle(ledger, &spec, m)?.iterations_to(1e-10))
        };
        let ours = reached(MethodSpec::AreRestart)?;
        let eg = reached(MethodSpec::Eg)?;
        let ogda = reached(MethodSpec::Ogda)?;
        let ok = match ours {
            Some(k) => eg.map_or(true, |e| k < e) && ogda.map_or(true, |o| k < o),
            None => false,
        };
        passed &= ok;
        let show = |v: Option<usize>| v.map_or(">budget".to_string(), |k| k.to_string());
        notes.push(format!(
            "lambda={lambda}: are-restart {} vs eg {} / ogda {}",
            show(ours),
            show(eg),
            show(ogda)
        ));
    }
    let spec = saddle_spec(0.001, 1e-6);
    let plain = run_saddle(ledger, &spec, MethodSpec::Are)?;
    let k = plain.iterations_to(1e-6);
    match k {
        None => {
            passed = false;
            notes.push(format!("lambda=0.001: ARE stopped at {:e} without reaching 1e-6", plain.final_residual()));
        }
        Some(k) => {
            let ours = plain.residual_at(k);
            let capped = BenchmarkSpec { max_iters: k, ..spec.clone() };
            let eg = run_saddle(ledger, &capped, MethodSpec::Eg)?;
            let ogda = run_saddle(ledger, &capped, MethodSpec::Ogda)?;
            let (re, ro) = (eg.residual_at(k), ogda.residual_at(k));
            passed &= eg.len() == k && ogda.len() == k && re >= 10.0 * ours && ro >= 10.0 * ours;
            notes.push(format!("lambda=0.001: ARE {ours:.2e} at k={k}, eg {re:.2e}, ogda {ro:.2e}"));
        }
    }
    Ok(Verdict::new(passed, notes.join("; ")))
}

/// Monotone skew-affine field on `[-1, 1]^4` with `M = 1`.
pub fn skew_box_problem() -> anyhow::Result<VIProblem> {
    let p = problems::skew_affine(4, 1.0, SEED, FeasibleSet::cube(4, -1.0, 1.0)?)?;
    let l1 = p.l1;
    Ok(p.with_constants(l1, 1.0, 0.0)?)
}

fn merit_rate(ledger: &Ledger) -> anyhow::Result<Verdict> {
    let problem = skew_box_problem()?;
    let oracle = taylor_oracle(&problem, 2)?;
    let cfg = AREConfig {
        max_iters: 1000,
        tol_residual: 0.0,
        ..AREConfig::new(2)
    };
    let reg = cfg.reg(&oracle)?;
    let trace = are::run_are(&problem, &oracle, &cfg, &Vector::zeros(4))?;
    ledger.keep("are skew-box", &trace, reg, 2);

    let diam = problem.set().diameter().context("box is bounded")?;
    let tau = cfg.effective_tau;
    let mut sampler = Sampler::new(SEED);
    let (mut sum, mut weight) = (Vector::zeros(4), 0.0);
    let mut series = Vec::with_capacity(trace.len());
    let mut worst_ratio: f64 = 0.0;
    let mut bound_held = true;
    for r in trace.records.iter().filter(|r| r.step_kind == StepKind::Are) {
        let x_half = r.x_half.as_ref().context("iterates stored")?;
        sum += x_half / r.gamma_k;
        weight += 1.0 / r.gamma_k;
        let merit = merit_estimate(&problem, &(&sum / weight), &mut sampler, 64)?.value;
        let n = r.k as f64;
        let bound = diam.powi(3) * reg / (2.0 * (1.0 - tau * tau).sqrt() * n.powf(1.5));
        bound_held &= merit <= bound;
        worst_ratio = worst_ratio.max(merit / bound);
        series.push((r.k, merit));
    }
    let last = series.last().map_or(0, |s| s.0);
    let fit = slope_estimate(&series, 10, 1000);
    let (slope_ok, slope_note) = match &fit {
        Ok(f) => ((-1.8..=-1.3).contains(&f.slope), format!("slope {:.3} over {} points", f.slope, f.n_used)),
        Err(e) => (false, format!("no slope: {e}")),
    };
    Ok(Verdict::new(
        slope_ok && bound_held && last >= 1000,
        format!(
            "{slope_note} (want [-1.8, -1.3]); merit/bound max {worst_ratio:.3e}; {} steps; final merit {:.3e}",
            last,
            series.last().map_or(f64::NAN, |s| s.1)
        ),
    ))
}

/// Strongly monotone affine field on the whole space: SPD part with spectrum
/// `[1, 4]`, skew part of norm 2, declared `l2 = 1` so that `M = 1`.
pub fn strongly_monotone_problem() -> anyhow::Result<VIProblem> {
    let spec = AffineSpec {
        dim: 5,
        mu: 1.0,
        l_sym: 4.0,
        skew: 2.0,
        seed: SEED,
    };
    let p = problems::random_affine(&spec, FeasibleSet::whole_space(5))?;
    let l1 = p.l1;
    Ok(p.with_constants(l1, 1.0, 1.0)?)
}

fn local_order(ledger: &Ledger) -> anyhow::Result<Verdict> {
    let problem = strongly_monotone_problem()?;
    let x_star = problem.reference_solution()?.clone();
    let oracle = taylor_oracle(&problem, 2)?;
    let cfg = AREConfig {
        alpha_local: 0.5,
        max_iters: 500,
        tol_residual: 1e-14,
        ..AREConfig::new(2)
    };
    let trace = are::run_algorithm1(&problem, &oracle, &cfg, &Vector::zeros(5))?;
    ledger.keep("are-local strongly-monotone", &trace, cfg.reg(&oracle)?, 2);
    let kinds: Vec<StepKind> = trace.records.iter().map(|r| r.step_kind).collect();
    let first_ar = kinds.iter().position(|k| *k == StepKind::Ar).ok_or_else(|| anyhow!("no AR step taken"))?;
    let reverted = kinds[first_ar..].iter().any(|k| *k == StepKind::Are);
    let ratios = superlinear_order_estimate(&trace, &x_star)?;
    let run = longest_run_at_least(&ratios, 1.8);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    Ok(Verdict::new(
        !reverted && run >= 3,
        format!(
            "first AR step at k={}, reverted: {reverted}; order ratios [{}], longest run >= 1.8: {run}",
            first_ar + 1,
            shown.join(", ")
        ),
    ))
}

fn epoch_contraction(ledger: &Ledger) -> anyhow::Result<Verdict> {
    let problem = strongly_monotone_problem()?;
    let x_star = problem.reference_solution()?.clone();
    let oracle = taylor_oracle(&problem, 2)?;
    let x0 = Vector::zeros(5);
    let base = AREConfig {
        delta: 0.5,
        tol_residual: 0.0,
        ..AREConfig::new(2)
    };
    let reg = base.reg(&oracle)?;
    let d0 = base.resolve_d0(&problem, &x0)?;
    let n = epoch_length(&base, reg, problem.mu, d0)?;
    let cfg = AREConfig { max_iters: 4 * n, ..base };
    let trace = are::run_are_restart(&problem, &oracle, &cfg, &x0)?;
    ledger.keep("are-restart strongly-monotone", &trace, reg, 2);

    let growth = (cfg.p as f64 + 1.0) / 2.0;
    let mut t = 1.0;
    let mut passed = true;
    let mut notes = Vec::new();
    for m in 0..4 {
        // a run that stopped at an exact solution has no later epochs; its answer stands in
        let out = trace.epoch_outputs.get(m).unwrap_or(&trace.final_iterate);
        let err2 = (out - &x_star).norm_squared();
        let bound = 2.0 * cfg.delta.powf(t) * d0 * d0;
        passed &= err2 <= bound;
        notes.push(format!("epoch {}: {err2:.2e} <= {bound:.2e}", m + 1));
        t = t * growth + 1.0;
    }
    Ok(Verdict::new(passed, format!("N={n}, D0={d0:.3}; {}", notes.join(", "))))
}

/// Random monotone affine subproblem data: `(matrix, offset, anchor, M)`.
fn random_subproblem(seed: u64) -> (Matrix, Vector, Vector, f64) {
    let mut s = Sampler::new(seed);
    let n = 2 + (seed % 4) as usize;
    let g = Matrix::from_fn(n, n - 1, |_, _| s.standard_normal());
    let k = Matrix::from_fn(n, n, |_, _| s.standard_normal());
    let b = &g * g.transpose() * 0.5 + (&k - k.transpose()) * 0.5;
    let offset = s.normal_vector(n);
    let anchor = s.normal_vector(n);
    let m = s.uniform_range(0.5, 2.0);
    (b, offset, anchor, m)
}

/// Root of `lambda = M ||(B + lambda I)^{-1} c||` by scanning `points` grid
/// values on `(0, sqrt(M ||c||)]` and interpolating inside the sign change.
fn grid_lambda(b: &Matrix, c: &Vector, m: f64, points: usize) -> Option<f64> {
    let n = c.len();
    let phi = |lambda: f64| {
        let shifted = b + Matrix::identity(n, n) * lambda;
        shifted.lu().solve(c).map(|d| lambda - m * d.norm())
    };
    let top = (m * c.norm()).sqrt() * 1.001;
    let h = top / points as f64;
    let mut prev = (h, phi(h)?);
    for i in 2..=points {
        let lambda = h * i as f64;
        let v = phi(lambda)?;
        if prev.1 <= 0.0 && v >= 0.0 {
            return Some(prev.0 + (lambda - prev.0) * (-prev.1) / (v - prev.1));
        }
        prev = (lambda, v);
    }
    None
}

fn strategy_agreement(_: &Ledger) -> anyhow::Result<Verdict> {
    let mut worst: f64 = 0.0;
    let mut worst_grid: f64 = 0.0;
    for seed in 0..20u64 {
        let (b, offset, anchor, m) = random_subproblem(SEED + seed);
        let n = anchor.len();
        let problem = problems::affine("sub", b.clone(), offset, FeasibleSet::whole_space(n))?.with_constants(1.0, 1.0, 0.0)?;
        let oracle = taylor_oracle(&problem, 2)?;
        let inst = SubproblemInstance::new(&oracle, &anchor, m, problem.set());
        let tol = 1e-12;
        let sols = [
            newton_lambda(&inst, tol)?.x_half,
            bisection_lambda(&inst, tol)?.x_half,
            ss2_loop(&inst, tol)?.x_half,
            inner_eg(&inst, None, tol)?.x_half,
        ];
        for i in 0..sols.len() {
            for j in i + 1..sols.len() {
                worst = worst.max((&sols[i] - &sols[j]).norm());
            }
        }
        if seed < 5 {
            let c = problem.eval_operator(&anchor)?;
            let lambda = grid_lambda(&b, &c, m, 1_000_000).ok_or_else(|| anyhow!("grid scan found no root"))?;
            let shifted = &b + Matrix::identity(n, n) * lambda;
            let x_grid = &anchor - shifted.lu().solve(&c).context("regular shift")?;
            worst_grid = worst_grid.max((&sols[0] - x_grid).norm());
        }
    }
    Ok(Verdict::new(
        worst <= 1e-6 && worst_grid <= 1e-8,
        format!("max pairwise gap {worst:.2e} (<= 1e-6), newton vs grid scan {worst_grid:.2e} (<= 1e-8)"),
    ))
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn lambda_certificates(_: &Ledger) -> anyhow::Result<Verdict> {
    let scalar = problems::affine("diag2", Matrix::from_element(1, 1, 2.0), Vector::zeros(1), FeasibleSet::whole_space(1))?
        .with_constants(2.0, 1.0, 2.0)?;
    let oracle = taylor_oracle(&scalar, 2)?;
    let anchor = Vector::from_element(1, 1.0);
    let got = newton_lambda(&SubproblemInstance::new(&oracle, &anchor, 1.0, scalar.set()), 1e-13)?.lambda;
    let want = bisect(|l| l - 2.0 / (2.0 + l), 0.0, 2.0);
    let closed = 3f64.sqrt() - 1.0;
    let scalar_ok = (got - want).abs() <= 1e-10 && (want - closed).abs() <= 1e-12;

    let rotation = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let skew = problems::affine("rotation", rotation, Vector::zeros(2), FeasibleSet::whole_space(2))?
        .with_constants(1.0, 1.0, 0.0)?;
    let oracle = taylor_oracle(&skew, 2)?;
    let anchor = Vector::from_vec(vec![1.0, 0.0]);
    let got_skew = newton_lambda(&SubproblemInstance::new(&oracle, &anchor, 1.0, skew.set()), 1e-13)?.lambda;
    let want_skew = bisect(|l| l.powi(4) + l * l - 1.0, 0.0, 1.0);
    let skew_ok = (got_skew - want_skew).abs() <= 1e-8;
    Ok(Verdict::new(
        scalar_ok && skew_ok,
        format!("diag(2): {got:.12} vs {want:.12}; skew: {got_skew:.10} vs {want_skew:.10}"),
    ))
}

fn eg_iterations(kappa: f64) -> anyhow::Result<usize> {
    let spec = AffineSpec {
        dim: 10,
        mu: 1.0,
        l_sym: kappa,
        skew: 0.0,
        seed: SEED,
    };
    let problem = problems::random_affine(&spec, FeasibleSet::whole_space(10))?;
    ensure!((problem.l1 - kappa).abs() <= 1e-9 * kappa, "l1 {} differs from kappa {kappa}", problem.l1);
    let cfg = are_vi::FirstOrderConfig {
        max_iters: 1_000_000,
        tol_residual: 1e-8,
        ..are_vi::FirstOrderConfig::defaults(FirstOrderMethod::Extragradient, problem.l1)?
    };
    let trace = run_first_order(&problem, &cfg, &Vector::zeros(10))?;
    trace.iterations_to(1e-8).ok_or_else(|| anyhow!("EG did not reach 1e-8 at kappa {kappa}"))
}

fn eg_scaling(_: &Ledger) -> anyhow::Result<Verdict> {
    let k10 = eg_iterations(10.0)?;
    let k100 = eg_iterations(100.0)?;
    let ratio = k100 as f64 / k10 as f64;
    Ok(Verdict::new(
        (6.0..=14.0).contains(&ratio),
        format!("kappa=10: {k10}, kappa=100: {k100}, ratio {ratio:.2} (want [6, 14])"),
    ))
}

/// Largest idempotency and firm-nonexpansiveness defects over `samples` pairs.
fn projection_defects(set: &FeasibleSet, s: &mut Sampler, samples: usize) -> anyhow::Result<(f64, f64)> {
    let n = set.dim();
    let (mut idem, mut firm): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let z = s.normal_vector(n) * 3.0;
        let w = s.normal_vector(n) * 3.0;
        let (pz, pw) = (set.project(&z)?, set.project(&w)?);
        idem = idem.max((set.project(&pz)? - &pz).norm());
        let d = &pz - &pw;
        firm = firm.max(d.norm_squared() - d.dot(&(&z - &w)));
    }
    Ok((idem, firm))
}

/// Relative defects of `gamma_k = M ||x_half - x||^{p-1}` and of the stored
/// weighted averages, replayed from the records.
pub fn trace_defects(a: &Audited) -> anyhow::Result<(f64, f64)> {
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
    let rel_vec = |x: &Vector, y: &Vector| (x - y).norm() / x.norm().max(y.norm()).max(f64::MIN_POSITIVE);
    let mut gamma_defect: f64 = 0.0;
    let mut avg_defect: f64 = 0.0;
    let mut outputs = a.trace.epoch_outputs.iter();
    let dim = a.trace.final_iterate.len();
    let (mut sum, mut weight) = (Vector::zeros(dim), 0.0);
    let mut epoch = a.trace.records.first().map_or(1, |r| r.epoch);
    for r in &a.trace.records {
        if r.epoch != epoch {
            let out = outputs.next().ok_or_else(|| anyhow!("{}: epoch closed without an output", a.label))?;
            avg_defect = avg_defect.max(rel_vec(out, &(&sum / weight)));
            (sum, weight, epoch) = (Vector::zeros(dim), 0.0, r.epoch);
        }
        let (Some(x), Some(x_half)) = (&r.x, &r.x_half) else {
            return Err(anyhow!("{}: iterates not stored", a.label));
        };
        if r.step_kind == StepKind::Stationary {
            continue;
        }
        let want = a.reg * (x_half - x).norm().powi(a.p as i32 - 1);
        gamma_defect = gamma_defect.max(rel(r.gamma_k, want));
        match r.step_kind {
            StepKind::Are => {
                sum += x_half / r.gamma_k;
                weight += 1.0 / r.gamma_k;
            }
            StepKind::Ar => (sum, weight) = (Vector::zeros(dim), 0.0),
            _ => {}
        }
    }
    if weight > 0.0 {
        // the last epoch either closed on the final step or is still open
        if let Some(out) = outputs.next() {
            avg_defect = avg_defect.max(rel_vec(out, &(&sum / weight)));
        } else {
            let mean = a.trace.averaged_iterate.as_ref().ok_or_else(|| anyhow!("{}: no stored average", a.label))?;
            avg_defect = avg_defect.max(rel_vec(mean, &(&sum / weight)));
            avg_defect = avg_defect.max(rel(a.trace.gamma_sum, weight));
        }
    }
    if outputs.next().is_some() {
        return Err(anyhow!("{}: more epoch outputs than epochs", a.label));
    }
    Ok((gamma_defect, avg_defect))
}

fn files_under(dir: &Path) -> anyhow::Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir)?.to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path)?));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Two `bench` runs into the same, emptied, directory; `Ok(file count)`
/// when every file matches byte for byte.
fn bench_determinism() -> anyhow::Result<std::result::Result<usize, String>> {
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("out");
    let out_str = out.to_str().context("utf-8 temp path")?;
    let args = [
        "are-bench",
        "bench",
        "--lambda",
        "0.1",
        "--max-iters",
        "60",
        "--method",
        "projection,eg,ogda,are,are-restart,are-local",
        "--out",
        out_str,
    ];
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        if out.exists() {
            std::fs::remove_dir_all(&out)?;
        }
        let code = are_bench::cli::run(args, &mut std::io::sink());
        if code != 0 {
            return Ok(Err(format!("bench exited with {code}")));
        }
        snapshots.push(files_under(&out)?);
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    if a != b {
        let differing: Vec<&str> = a
            .iter()
            .zip(b)
            .filter(|(x, y)| x != y)
            .map(|(x, _)| x.0.as_str())
            .collect();
        return Ok(Err(format!("outputs differ: {differing:?}")));
    }
    Ok(Ok(a.len()))
}

fn properties(ledger: &Ledger) -> anyhow::Result<Verdict> {
    let mut s = Sampler::new(SEED);
    let mut passed = true;
    let mut notes = Vec::new();

    let n = 5;
    let sets = [
        FeasibleSet::whole_space(n),
        FeasibleSet::nonnegative_orthant(n),
        FeasibleSet::cube(n, -1.0, 1.0)?,
        FeasibleSet::boxed(
            Vector::from_vec(vec![f64::NEG_INFINITY, -1.0, 0.0, -2.0, f64::NEG_INFINITY]),
            Vector::from_vec(vec![1.0, f64::INFINITY, 0.5, 2.0, f64::INFINITY]),
        )?,
        FeasibleSet::ball(Vector::from_element(n, 0.3), 1.5)?,
    ];
    let (mut idem, mut firm): (f64, f64) = (0.0, 0.0);
    for set in &sets {
        let (i, f) = projection_defects(set, &mut s, 1000)?;
        idem = idem.max(i);
        firm = firm.max(f);
    }
    passed &= idem <= 1e-10 && firm <= 1e-10;
    notes.push(format!("projection idempotency {idem:.1e}, firm nonexpansiveness {firm:.1e}"));

    let saddle = LogisticSaddleData::generate(SEED, 100, 100, 5, 8, 0.1)?.to_problem(0.3)?;
    let composite = problems::composite_demo(SEED, 6, FeasibleSet::whole_space(6))?;
    let composite_problem = problems::composite_demo_problem(SEED, 6, FeasibleSet::whole_space(6))?;
    let mut worst_bound = f64::NEG_INFINITY;
    for (oracle, problem) in [
        (taylor_oracle(&saddle, 1)?, &saddle),
        (composite_split_oracle(&composite), &composite_problem),
    ] {
        let center = problem.set().anchor_point();
        let report = verify_oracle_bound(&oracle, problem, &mut s, &center, 2.0, 1000)?;
        worst_bound = worst_bound.max(report.max_violation);
    }
    passed &= worst_bound <= 1e-10;
    notes.push(format!("oracle bound violation {worst_bound:.1e}"));

    let mut worst_jac: f64 = 0.0;
    for problem in [&saddle, &composite_problem] {
        let center = problem.set().anchor_point();
        for _ in 0..20 {
            worst_jac = worst_jac.max(jacobian_consistency(problem, &s.point_in_ball(&center, 2.0))?);
        }
    }
    passed &= worst_jac <= 1e-5;
    notes.push(format!("jacobian defect {worst_jac:.1e}"));

    let traces = ledger.0.lock().expect("ledger lock");
    let (mut gamma, mut avg): (f64, f64) = (0.0, 0.0);
    for audited in traces.iter() {
        let (g, a) = trace_defects(audited)?;
        gamma = gamma.max(g);
        avg = avg.max(a);
    }
    passed &= !traces.is_empty() && gamma <= 1e-12 && avg <= 1e-12;
    notes.push(format!("{} traces: gamma defect {gamma:.1e}, averaging defect {avg:.1e}", traces.len()));
    drop(traces);

    match bench_determinism()? {
        Ok(files) => notes.push(format!("bench twice: {files} identical files")),
        Err(why) => {
            passed = false;
            notes.push(format!("bench twice: {why}"));
        }
    }
    Ok(Verdict::new(passed, notes.join("; ")))
}
