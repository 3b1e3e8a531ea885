//! Command-line entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use are_vi::oracle::{taylor_oracle, verify_oracle_bound};
use are_vi::problem::{jacobian_consistency, monotonicity_probe, power_iteration_norm};
use are_vi::Sampler;
use clap::{Args, Parser, Subcommand};

use crate::config::{BenchmarkSpec, Settings};
use crate::suite::{build_instance, run_benchmark, run_suite, SuiteResult};

#[derive(Debug, Parser)]
#[command(name = "are-bench", version, about = "Race ARE solvers against first-order baselines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one method on one problem and write its trace.
    Solve(RunArgs),
    /// Run the saddle-point suite and write traces, manifest and plot data.
    Bench(RunArgs),
    /// Run several methods and print a comparison table.
    Compare(RunArgs),
    /// Report declared and probed constants of a problem.
    Probe(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML file with the same keys as the flags (kebab-case).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

impl RunArgs {
    fn spec(&self) -> anyhow::Result<BenchmarkSpec> {
        let settings = match &self.config {
            Some(path) => self.settings.clone().or(Settings::from_toml_file(path)?),
            None => self.settings.clone(),
        };
        BenchmarkSpec::from_settings(&settings)
    }
}

fn print_table(out: &mut impl Write, result: &SuiteResult) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<12} {:<16} {:>8} {:>10} {:>14} {:>10}",
        "method", "status", "iters", "to tol", "residual", "wall ms"
    )?;
    for o in &result.outcomes {
        let status = match &o.status {
            crate::suite::Status::Converged => "converged".to_string(),
            crate::suite::Status::BudgetExhausted => "budget".to_string(),
            crate::suite::Status::Diverged => "diverged".to_string(),
            crate::suite::Status::Failed(_) => "failed".to_string(),
            crate::suite::Status::ConfigError(_) => "config-error".to_string(),
        };
        let to_tol = o
            .trace
            .as_ref()
            .and_then(|t| t.iterations_to(result.spec.tol))
            .map_or("-".to_string(), |k| k.to_string());
        let res = o.final_residual().map_or("-".to_string(), |r| format!("{r:.3e}"));
        writeln!(
            out,
            "{:<12} {:<16} {:>8} {:>10} {:>14} {:>10.1}",
            o.method.name(),
            status,
            o.iterations(),
            to_tol,
            res,
            o.wall_ns as f64 / 1e6
        )?;
        if let crate::suite::Status::Failed(msg) | crate::suite::Status::ConfigError(msg) = &o.status {
            writeln!(out, "    {msg}")?;
        }
    }
    Ok(())
}

fn probe(out: &mut impl Write, spec: &BenchmarkSpec) -> anyhow::Result<()> {
    let inst = build_instance(spec)?;
    let p = &inst.problem;
    let x0 = p.set().anchor_point();
    let mut s = Sampler::new(spec.seed ^ 0x0b5e);
    writeln!(out, "problem          {}", p.name())?;
    writeln!(out, "dimension        {}", p.dim())?;
    writeln!(out, "data hash        {}", inst.data_hash)?;
    writeln!(out, "declared l1      {:e}", p.l1)?;
    writeln!(out, "declared l2      {:e}", p.l2)?;
    writeln!(out, "declared mu      {:e}", p.mu)?;
    if let Ok(j) = p.jacobian(&x0) {
        writeln!(out, "||J(x0)||_2      {:e}", power_iteration_norm(&j, 200))?;
    }
    let mu_est = monotonicity_probe(p, &mut s, &x0, 1.0, 2000)?;
    writeln!(out, "probed mu        {mu_est:e} (upper estimate)")?;
    if p.has_jacobian() {
        let worst = (0..20)
            .map(|_| jacobian_consistency(p, &s.point_in_ball(&x0, 1.0)))
            .collect::<are_vi::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        writeln!(out, "jacobian check   {worst:e} (relative, 20 points)")?;
    }
    for order in [1usize, 2] {
        let Ok(oracle) = taylor_oracle(p, order) else { continue };
        let r = verify_oracle_bound(&oracle, p, &mut s, &x0, 1.0, 1000)?;
        writeln!(
            out,
            "taylor p={order}       max violation {:e}, empirical l{order} {:e} ({})",
            r.max_violation,
            r.empirical_lp,
            if r.held() { "bound held" } else { "bound violated" }
        )?;
    }
    for note in &inst.notes {
        writeln!(out, "note: {note}")?;
    }
    Ok(())
}

fn dispatch(cli: Cli, out: &mut impl Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::Solve(args) => {
            let spec = args.spec()?;
            anyhow::ensure!(
                spec.methods.len() == 1,
                "solve runs exactly one method, got {}",
                spec.methods.len()
            );
            let result = run_benchmark(&spec)?;
            print_table(out, &result)?;
            Ok(result.exit_code())
        }
        Command::Bench(args) => {
            let spec = args.spec()?;
            let result = run_benchmark(&spec)?;
            print_table(out, &result)?;
            writeln!(out, "wrote {}", spec.out_dir.display())?;
            Ok(result.exit_code())
        }
        Command::Compare(args) => {
            let spec = args.spec()?;
            let result = run_suite(&spec)?;
            print_table(out, &result)?;
            Ok(result.exit_code())
        }
        Command::Probe(args) => {
            probe(out, &args.spec()?)?;
            Ok(0)
        }
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli, out).context("are-bench") {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
