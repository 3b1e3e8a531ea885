//! Problem construction and the method race.

use std::time::Instant;

use anyhow::Context;
use are_vi::are::{self, epoch_length};
use are_vi::first_order::run_first_order;
use are_vi::oracle::{taylor_oracle, verify_oracle_bound};
use are_vi::problems::{self, AffineSpec, LogisticSaddleData};
use are_vi::{
    AREConfig, ConvergenceTrace, Error, FeasibleSet, FirstOrderConfig, FirstOrderMethod, Sampler, VIProblem,
    Vector,
};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{BenchmarkSpec, MethodSpec};

/// A generated problem plus what the manifest needs to know about it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: VIProblem,
    /// SHA-256 of the generated data, hex encoded.
    pub data_hash: String,
    pub notes: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn matrix_bytes(mats: &[&are_vi::Matrix]) -> Vec<u8> {
    let mut out = Vec::new();
    for mat in mats {
        for i in 0..mat.nrows() {
            for j in 0..mat.ncols() {
                out.extend_from_slice(&mat[(i, j)].to_le_bytes());
            }
        }
    }
    out
}

/// Largest `||F~(x;y) - F(x)|| / (tau ||x - y||^2)` seen over sampled pairs
/// around the origin for the second-order Taylor oracle.
pub fn probe_l2(problem: &VIProblem, seed: u64, radius: f64, n_pairs: usize) -> anyhow::Result<f64> {
    let oracle = taylor_oracle(problem, 2)?;
    let mut sampler = Sampler::new(seed);
    let center = problem.set().anchor_point();
    Ok(verify_oracle_bound(&oracle, problem, &mut sampler, &center, radius, n_pairs)?.empirical_lp)
}

/// The saddle instance of `spec` with `mu = lambda` and the declared (or probed) `l2`.
pub fn generate_logistic_saddle(spec: &BenchmarkSpec) -> anyhow::Result<Instance> {
    let data = LogisticSaddleData::generate(spec.seed, spec.m1, spec.m2, spec.n, spec.m, spec.lambda)?;
    let data_hash = sha256_hex(&data.to_le_bytes());
    let mut problem = data.to_problem(spec.l2_declared)?.with_data_hash(data_hash.clone());
    let mut notes = vec![format!(
        "x has n = {} coordinates and y has m = {}; the source states m = 2n = 50, read here as m = 50, n = 25",
        spec.n, spec.m
    )];
    if spec.probed_l2 {
        let l2 = probe_l2(&problem, spec.seed ^ 0x5eed, 1.0, 2000)?;
        notes.push(format!("l2 replaced by the probed value {l2:e} (declared {})", spec.l2_declared));
        problem = problem.clone().with_constants(problem.l1, l2, problem.mu)?;
    }
    Ok(Instance {
        problem,
        data_hash,
        notes,
    })
}

/// Build the problem named in `spec` and apply the constant overrides.
pub fn build_instance(spec: &BenchmarkSpec) -> anyhow::Result<Instance> {
    let mut inst = match spec.problem_name.as_str() {
        "logistic-saddle" => generate_logistic_saddle(spec)?,
        "affine" => {
            let aspec = AffineSpec {
                dim: spec.n,
                mu: spec.mu_override.unwrap_or(1.0),
                l_sym: spec.l1_override.unwrap_or(10.0),
                skew: 1.0,
                seed: spec.seed,
            };
            let (a, b) = aspec.matrix_and_offset()?;
            let hash = sha256_hex(&matrix_bytes(&[&a, &are_vi::Matrix::from_column_slice(b.len(), 1, b.as_slice())]));
            let problem = problems::random_affine(&aspec, FeasibleSet::whole_space(spec.n))?;
            let (l1, mu) = (problem.l1, problem.mu);
            Instance {
                problem: problem.with_constants(l1, spec.l2_declared, mu)?.with_data_hash(hash.clone()),
                data_hash: hash,
                notes: vec!["affine field: declared l2 only sets the default regularization constant".into()],
            }
        }
        "composite-demo" => {
            let problem = problems::composite_demo_problem(spec.seed, spec.n, FeasibleSet::whole_space(spec.n))?;
            let hash = sha256_hex(format!("composite-demo:{}:{}", spec.seed, spec.n).as_bytes());
            Instance {
                problem: problem.with_data_hash(hash.clone()),
                data_hash: hash,
                notes: vec![],
            }
        }
        other => anyhow::bail!("unknown problem `{other}`"),
    };
    if spec.l1_override.is_some() || spec.mu_override.is_some() {
        let p = &inst.problem;
        let l1 = spec.l1_override.unwrap_or(p.l1);
        let mu = spec.mu_override.unwrap_or(p.mu);
        inst.problem = p.clone().with_constants(l1, p.l2, mu)?;
    }
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum Status {
    Converged,
    /// The iteration budget ran out before the tolerance was met.
    BudgetExhausted,
    Diverged,
    /// A solver error other than divergence.
    Failed(String),
    /// The method cannot be configured for this problem.
    ConfigError(String),
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: MethodSpec,
    pub trace: Option<ConvergenceTrace>,
    pub status: Status,
    pub wall_ns: u128,
    /// Resolved step sizes, regularization constant, strategy, epoch length.
    pub params: serde_json::Value,
}

impl MethodOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.as_ref().map_or(0, ConvergenceTrace::len)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.trace.as_ref().map(ConvergenceTrace::final_residual)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub spec: BenchmarkSpec,
    pub data_hash: String,
    pub notes: Vec<String>,
    pub outcomes: Vec<MethodOutcome>,
    pub wall_ns: u128,
}

impl SuiteResult {
    pub fn outcome(&self, method: MethodSpec) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }

    /// 0 when nothing diverged or failed, 2 on divergence or solver failure,
    /// 1 when a method could not be configured.
    pub fn exit_code(&self) -> i32 {
        let statuses = self.outcomes.iter().map(|o| &o.status);
        if statuses.clone().any(|s| matches!(s, Status::Diverged | Status::Failed(_))) {
            2
        } else if statuses.clone().any(|s| matches!(s, Status::ConfigError(_))) {
            1
        } else {
            0
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::StrategyMismatch { .. }
            | Error::NotStronglyMonotone
            | Error::LocalConditionUnsupported
            | Error::UnsupportedOrder(_)
            | Error::MissingJacobian(_)
            | Error::UnboundedSet
            | Error::DimensionMismatch { .. }
    )
}

fn settle(method: MethodSpec, result: are_vi::Result<ConvergenceTrace>, params: serde_json::Value, wall_ns: u128) -> MethodOutcome {
    let (trace, status) = match result {
        Ok(t) if t.converged => (Some(t), Status::Converged),
        Ok(t) => (Some(t), Status::BudgetExhausted),
        Err(Error::Divergence { trace, .. }) => (Some(*trace), Status::Diverged),
        Err(e) if is_config_error(&e) => (None, Status::ConfigError(e.to_string())),
        Err(e) => (None, Status::Failed(e.to_string())),
    };
    MethodOutcome {
        method,
        trace,
        status,
        wall_ns,
        params,
    }
}

/// The solver settings `spec` implies for an ARE-type method.
pub fn are_config(spec: &BenchmarkSpec) -> AREConfig {
    AREConfig {
        reg_constant: spec.reg,
        effective_tau: spec.effective_tau,
        delta: spec.delta,
        alpha_local: spec.alpha,
        d0: spec.d0,
        restart_n: spec.restart_n,
        max_iters: spec.max_iters,
        tol_residual: spec.tol,
        subproblem_strategy: spec.strategy(),
        store_iterates: false,
        ..AREConfig::new(spec.p)
    }
}

/// The solver settings `spec` implies for a first-order method.
pub fn first_order_config(spec: &BenchmarkSpec, method: FirstOrderMethod, l1: f64) -> are_vi::Result<FirstOrderConfig> {
    Ok(FirstOrderConfig {
        max_iters: spec.max_iters,
        tol_residual: spec.tol,
        store_iterates: false,
        ..FirstOrderConfig::defaults(method, l1)?
    })
}

/// Run one method from `x_init` on `problem`.
pub fn run_method(problem: &VIProblem, spec: &BenchmarkSpec, method: MethodSpec, x_init: &Vector) -> MethodOutcome {
    let start = Instant::now();
    let fo = match method {
        MethodSpec::Projection => Some(FirstOrderMethod::Projection),
        MethodSpec::Eg => Some(FirstOrderMethod::Extragradient),
        MethodSpec::Ogda => Some(FirstOrderMethod::Ogda),
        _ => None,
    };
    if let Some(fo) = fo {
        let cfg = match first_order_config(spec, fo, problem.l1) {
            Ok(c) => c,
            Err(e) => return settle(method, Err(e), json!({}), 0),
        };
        let params = json!({
            "step_gamma": cfg.step_gamma,
            "ogda_alpha": cfg.ogda_alpha,
            "ogda_eta": cfg.ogda_eta,
            "x_init": "origin",
        });
        let result = run_first_order(problem, &cfg, x_init);
        return settle(method, result, params, start.elapsed().as_nanos());
    }
    let cfg = are_config(spec);
    let oracle = match taylor_oracle(problem, spec.p) {
        Ok(o) => o,
        Err(e) => return settle(method, Err(e), json!({}), 0),
    };
    let reg = match cfg.reg(&oracle) {
        Ok(r) => r,
        Err(e) => return settle(method, Err(e), json!({}), 0),
    };
    let mut params = json!({
        "p": spec.p,
        "reg_constant": reg,
        "effective_tau": cfg.effective_tau,
        "strategy": cfg.strategy(&oracle, problem).name(),
        "subproblem_tol": cfg.sub_tol(),
    });
    if matches!(method, MethodSpec::AreRestart | MethodSpec::AreLocal) {
        params["delta"] = json!(cfg.delta);
        params["alpha_local"] = json!(cfg.alpha_local);
        if let Ok(d0) = cfg.resolve_d0(problem, x_init) {
            params["d0"] = json!(d0);
            let n = cfg.restart_n.map(Ok).unwrap_or_else(|| epoch_length(&cfg, reg, problem.mu, d0));
            if let Ok(n) = n {
                params["epoch_length"] = json!(n);
            }
        }
    }
    let result = match method {
        MethodSpec::Are => are::run_are(problem, &oracle, &cfg, x_init),
        MethodSpec::AreRestart => are::run_are_restart(problem, &oracle, &cfg, x_init),
        MethodSpec::AreLocal => are::run_algorithm1(problem, &oracle, &cfg, x_init),
        _ => unreachable!("first-order methods handled above"),
    };
    settle(method, result, params, start.elapsed().as_nanos())
}

/// Build the instance and race every method of `spec` on it, one thread per method.
pub fn run_suite(spec: &BenchmarkSpec) -> anyhow::Result<SuiteResult> {
    spec.validate()?;
    let start = Instant::now();
    let inst = build_instance(spec).context("building the problem instance")?;
    let x_init = inst.problem.set().anchor_point();
    let outcomes = std::thread::scope(|scope| {
        let handles: Vec<_> = spec
            .methods
            .iter()
            .map(|&m| {
                let (problem, x_init) = (&inst.problem, &x_init);
                scope.spawn(move || run_method(problem, spec, m, x_init))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect::<Vec<_>>()
    });
    for o in &outcomes {
        log::info!(
            "{}: {:?} after {} iterations, residual {:?}",
            o.method,
            o.status,
            o.iterations(),
            o.final_residual()
        );
    }
    Ok(SuiteResult {
        spec: spec.clone(),
        data_hash: inst.data_hash,
        notes: inst.notes,
        outcomes,
        wall_ns: start.elapsed().as_nanos(),
    })
}

/// [`run_suite`] followed by writing the CSV, the manifest and the plot data to `spec.out_dir`.
pub fn run_benchmark(spec: &BenchmarkSpec) -> anyhow::Result<SuiteResult> {
    let result = run_suite(spec)?;
    crate::output::write_all(&result)?;
    Ok(result)
}
