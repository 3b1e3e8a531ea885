//! Run settings: command-line flags, the optional TOML file they override,
//! and the resolved [`BenchmarkSpec`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use are_vi::Strategy;
use clap::Args;
use serde::{Deserialize, Serialize};

/// One solver in a suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodSpec {
    Projection,
    Eg,
    Ogda,
    Are,
    AreRestart,
    AreLocal,
}

impl MethodSpec {
    pub const ALL: [MethodSpec; 6] = [
        MethodSpec::Projection,
        MethodSpec::Eg,
        MethodSpec::Ogda,
        MethodSpec::Are,
        MethodSpec::AreRestart,
        MethodSpec::AreLocal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodSpec::Projection => "projection",
            MethodSpec::Eg => "eg",
            MethodSpec::Ogda => "ogda",
            MethodSpec::Are => "are",
            MethodSpec::AreRestart => "are-restart",
            MethodSpec::AreLocal => "are-local",
        }
    }

    pub fn is_first_order(self) -> bool {
        matches!(self, MethodSpec::Projection | MethodSpec::Eg | MethodSpec::Ogda)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let found = MethodSpec::ALL.into_iter().find(|m| m.name() == s);
        match (found, s) {
            (Some(m), _) => Ok(m),
            (None, "extragradient") => Ok(MethodSpec::Eg),
            (None, "algorithm1") => Ok(MethodSpec::AreLocal),
            _ => bail!(
                "unknown method `{s}` (expected one of: {})",
                MethodSpec::ALL.map(|m| m.name()).join(", ")
            ),
        }
    }
}

/// Every tunable value. As flags all are optional; the same keys (kebab-case)
/// are accepted in a TOML file given with `--config`, and flags win.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Built-in problem: affine, logistic-saddle or composite-demo.
    #[arg(long)]
    pub problem: Option<String>,
    /// Methods, comma separated: projection, eg, ogda, are, are-restart, are-local.
    #[arg(long = "method", value_delimiter = ',')]
    #[serde(default, rename = "method")]
    pub methods: Option<Vec<String>>,
    /// Order of the ARE methods (1 or 2).
    #[arg(long)]
    pub p: Option<usize>,
    /// Subproblem strategy: newton-lambda, bisection-lambda, ss2, inner-eg.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Override the declared Lipschitz constant of F.
    #[arg(long)]
    pub l1: Option<f64>,
    /// Declared Lipschitz constant of the Jacobian.
    #[arg(long)]
    pub l2: Option<f64>,
    /// Override the declared strong-monotonicity modulus.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Effective tau, in (0, 1).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Regularization constant M.
    #[arg(long)]
    pub reg: Option<f64>,
    /// Epoch contraction target.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Local switching parameter.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Estimate of the initial distance to the solution.
    #[arg(long)]
    pub d0: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fixed epoch length for the restarted methods.
    #[arg(long)]
    pub restart_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Regularization weight of the saddle problem.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of `a_i` samples.
    #[arg(long)]
    pub m1: Option<usize>,
    /// Number of `b_j` samples.
    #[arg(long)]
    pub m2: Option<usize>,
    /// Dimension of `x` (and of the affine and composite problems).
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimension of `y`.
    #[arg(long)]
    pub m: Option<usize>,
    /// Replace the declared l2 by the value probed from the Taylor remainder.
    #[arg(long)]
    #[serde(default)]
    pub probed_l2: Option<bool>,
    /// Record wall-clock nanoseconds in the CSV (breaks byte-for-byte reproducibility).
    #[arg(long)]
    #[serde(default)]
    pub timing: Option<bool>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl Settings {
    pub fn from_toml_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fill every unset value from `file`.
    pub fn or(mut self, file: Settings) -> Self {
        merge_fields!(self, file; problem, methods, p, strategy, l1, l2, mu, tau, reg, delta, alpha, d0,
            max_iters, tol, restart_n, seed, out, lambda, m1, m2, n, m, probed_l2, timing);
        self
    }
}

pub const DEFAULT_SEED: u64 = 20240601;

/// A fully resolved run description, echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSpec {
    pub problem_name: String,
    pub seed: u64,
    pub m1: usize,
    pub m2: usize,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub l2_declared: f64,
    pub probed_l2: bool,
    pub l1_override: Option<f64>,
    pub mu_override: Option<f64>,
    pub methods: Vec<MethodSpec>,
    pub p: usize,
    pub strategy: Option<String>,
    pub effective_tau: f64,
    pub reg: Option<f64>,
    pub delta: f64,
    pub alpha: f64,
    pub d0: Option<f64>,
    pub restart_n: Option<usize>,
    pub max_iters: usize,
    pub tol: f64,
    pub out_dir: PathBuf,
    pub timing: bool,
}

impl Default for BenchmarkSpec {
    /// The saddle suite: `M1 = M2 = 100`, `n = 25`, `m = 50`, `lambda = 1`, `l2 = 0.3`.
    fn default() -> Self {
        Self {
            problem_name: "logistic-saddle".into(),
            seed: DEFAULT_SEED,
            m1: 100,
            m2: 100,
            n: 25,
            m: 50,
            lambda: 1.0,
            l2_declared: 0.3,
            probed_l2: false,
            l1_override: None,
            mu_override: None,
            methods: vec![MethodSpec::Eg, MethodSpec::Ogda, MethodSpec::Are, MethodSpec::AreRestart],
            p: 2,
            strategy: None,
            effective_tau: 0.5,
            reg: None,
            delta: 0.5,
            alpha: 0.5,
            d0: None,
            restart_n: None,
            max_iters: 10_000,
            tol: 1e-10,
            out_dir: PathBuf::from("bench-out"),
            timing: false,
        }
    }
}

impl BenchmarkSpec {
    pub fn from_settings(s: &Settings) -> anyhow::Result<Self> {
        let d = BenchmarkSpec::default();
        let methods = match &s.methods {
            Some(list) => list
                .iter()
                .map(|m| m.trim())
                .filter(|m| !m.is_empty())
                .map(str::parse)
                .collect::<anyhow::Result<Vec<_>>>()?,
            None => d.methods.clone(),
        };
        if let Some(st) = &s.strategy {
            st.parse::<Strategy>()?;
        }
        let problem_name = s.problem.clone().unwrap_or(d.problem_name);
        if !are_vi::problems::BUILTIN_NAMES.contains(&problem_name.as_str()) {
            bail!(
                "unknown problem `{problem_name}` (expected one of: {})",
                are_vi::problems::BUILTIN_NAMES.join(", ")
            );
        }
        let spec = Self {
            problem_name,
            seed: s.seed.unwrap_or(d.seed),
            m1: s.m1.unwrap_or(d.m1),
            m2: s.m2.unwrap_or(d.m2),
            n: s.n.unwrap_or(d.n),
            m: s.m.unwrap_or(d.m),
            lambda: s.lambda.unwrap_or(d.lambda),
            l2_declared: s.l2.unwrap_or(d.l2_declared),
            probed_l2: s.probed_l2.unwrap_or(false),
            l1_override: s.l1,
            mu_override: s.mu,
            methods,
            p: s.p.unwrap_or(d.p),
            strategy: s.strategy.clone(),
            effective_tau: s.tau.unwrap_or(d.effective_tau),
            reg: s.reg,
            delta: s.delta.unwrap_or(d.delta),
            alpha: s.alpha.unwrap_or(d.alpha),
            d0: s.d0,
            restart_n: s.restart_n,
            max_iters: s.max_iters.unwrap_or(d.max_iters),
            tol: s.tol.unwrap_or(d.tol),
            out_dir: s.out.clone().unwrap_or(d.out_dir),
            timing: s.timing.unwrap_or(false),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if [self.m1, self.m2, self.n, self.m].contains(&0) {
            bail!("m1, m2, n and m must be positive");
        }
        if !(self.lambda >= 0.0) {
            bail!("lambda must be nonnegative");
        }
        if !(self.l2_declared > 0.0) {
            bail!("l2 must be positive");
        }
        if !(self.tol >= 0.0) {
            bail!("tol must be nonnegative");
        }
        if !(1..=2).contains(&self.p) {
            bail!("built-in oracles support p = 1 or p = 2, got {}", self.p);
        }
        Ok(())
    }

    pub fn strategy(&self) -> Option<Strategy> {
        self.strategy.as_deref().map(|s| s.parse().expect("validated in from_settings"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: Settings = toml::from_str(
            r#"
            problem = "affine"
            method = ["eg", "are"]
            max-iters = 50
            tol = 1e-6
            lambda = 0.1
            "#,
        )
        .unwrap();
        let flags = Settings {
            max_iters: Some(7),
            ..Default::default()
        };
        let spec = BenchmarkSpec::from_settings(&flags.or(file)).unwrap();
        assert_eq!(spec.max_iters, 7);
        assert_eq!(spec.tol, 1e-6);
        assert_eq!(spec.problem_name, "affine");
        assert_eq!(spec.methods, vec![MethodSpec::Eg, MethodSpec::Are]);
        assert_eq!(spec.lambda, 0.1);
    }

    #[test]
    fn unknown_keys_and_values_are_rejected() {
        assert!(toml::from_str::<Settings>("bogus = 1").is_err());
        let s = Settings {
            methods: Some(vec!["newton".into()]),
            ..Default::default()
        };
        assert!(BenchmarkSpec::from_settings(&s).is_err());
        let s = Settings {
            strategy: Some("lu".into()),
            ..Default::default()
        };
        assert!(BenchmarkSpec::from_settings(&s).is_err());
    }

    #[test]
    fn defaults_are_the_saddle_suite() {
        let spec = BenchmarkSpec::from_settings(&Settings::default()).unwrap();
        assert_eq!((spec.m1, spec.m2, spec.n, spec.m), (100, 100, 25, 50));
        assert_eq!(spec.l2_declared, 0.3);
    }
}
