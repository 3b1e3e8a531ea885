//! CSV traces, the run manifest and gnuplot-ready data.
//!
//! Floats are written with `{:e}`, the shortest decimal that round-trips.
//! Every file depends only on the spec and the checkout, so repeated runs give
//! identical bytes; wall-clock times are written as 0 unless `timing` is set.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::Context;
use are_vi::ConvergenceTrace;
use serde_json::json;

use crate::config::MethodSpec;
use crate::suite::SuiteResult;

pub const CSV_HEADER: [&str; 8] = ["k", "epoch", "method", "step_kind", "residual", "gamma_k", "inner_iters", "wall_ns"];

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// One row per outer iteration of every method, in suite order.
pub fn write_trace_csv<W: Write>(out: W, result: &SuiteResult) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for o in &result.outcomes {
        let Some(trace) = &o.trace else { continue };
        for r in &trace.records {
            let wall = if result.spec.timing { r.wall_ns } else { 0 };
            w.write_record([
                r.k.to_string(),
                r.epoch.to_string(),
                o.method.name().to_string(),
                r.step_kind.as_str().to_string(),
                num(r.residual),
                num(r.gamma_k),
                r.inner_iters.to_string(),
                wall.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

pub fn manifest(result: &SuiteResult) -> serde_json::Value {
    let clock = |ns: u128| (if result.spec.timing { ns } else { 0 }).to_string();
    let methods: Vec<_> = result
        .outcomes
        .iter()
        .map(|o| {
            let trace = o.trace.as_ref();
            json!({
                "method": o.method.name(),
                "outcome": o.status,
                "iterations": o.iterations(),
                "initial_residual": trace.map(|t| t.initial_residual),
                "final_residual": o.final_residual(),
                "epochs_completed": trace.map(|t| t.epoch_outputs.len()),
                "wall_ns": clock(o.wall_ns),
                "params": o.params,
                "data_hash": result.data_hash,
            })
        })
        .collect();
    json!({
        "spec": result.spec,
        "seed": result.spec.seed,
        "git_describe": git_describe(),
        "data_hash": result.data_hash,
        "prng": "ChaCha20 (seed_from_u64), 53-bit uniforms, Box-Muller normals; draws a_i, then b_j, then A row-major",
        "x_init": "origin",
        "wall_ns": clock(result.wall_ns),
        "notes": result.notes,
        "methods": methods,
    })
}

/// Panels of the plot script: first-order baselines against plain ARE, and
/// against the restarted variants.
const PANELS: [(&str, &[MethodSpec]); 2] = [
    ("plain", &[MethodSpec::Projection, MethodSpec::Eg, MethodSpec::Ogda, MethodSpec::Are]),
    (
        "restart",
        &[MethodSpec::Projection, MethodSpec::Eg, MethodSpec::Ogda, MethodSpec::AreRestart, MethodSpec::AreLocal],
    ),
];

/// Write `<method>.dat` (header plus `k residual` rows) per trace and a
/// `residuals.gp` gnuplot script drawing the two panels. Returns the written paths.
pub fn emit_plot_data(traces: &[(&str, &ConvergenceTrace)], out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    anyhow::ensure!(!traces.is_empty(), "no traces to plot");
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();
    for (name, trace) in traces {
        let mut text = String::from("# k residual\n");
        for r in &trace.records {
            writeln!(text, "{} {}", r.k, num(r.residual)).expect("writing to a String");
        }
        let path = out_dir.join(format!("{name}.dat"));
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }

    let mut gp = String::new();
    gp.push_str("set terminal pngcairo size 1200,480\nset output 'residuals.png'\n");
    gp.push_str("set logscale y\nset format y '10^{%L}'\nset xlabel 'iteration'\nset ylabel 'residual'\n");
    gp.push_str("set key top right\nset multiplot layout 1,2\n");
    for (title, members) in PANELS {
        let present: Vec<&str> = traces
            .iter()
            .map(|(n, _)| *n)
            .filter(|n| members.iter().any(|m| m.name() == *n))
            .collect();
        writeln!(gp, "set title '{title}'").expect("writing to a String");
        if present.is_empty() {
            gp.push_str("plot NaN notitle\n");
            continue;
        }
        let series: Vec<String> = present
            .iter()
            .map(|n| format!("'{n}.dat' using 1:2 with lines title '{n}'"))
            .collect();
        writeln!(gp, "plot {}", series.join(", \\\n     ")).expect("writing to a String");
    }
    gp.push_str("unset multiplot\n");
    let path = out_dir.join("residuals.gp");
    fs::write(&path, gp).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}

/// `trace.csv`, `manifest.json` and, when there are traces, the plot files under `plot/`.
pub fn write_all(result: &SuiteResult) -> anyhow::Result<()> {
    let dir = &result.spec.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv_path = dir.join("trace.csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_trace_csv(std::io::BufWriter::new(file), result)?;
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest(result))? + "\n")
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    let traces: Vec<(&str, &ConvergenceTrace)> = result
        .outcomes
        .iter()
        .filter_map(|o| o.trace.as_ref().map(|t| (o.method.name(), t)))
        .collect();
    if !traces.is_empty() {
        emit_plot_data(&traces, &dir.join("plot"))?;
    }
    Ok(())
}
