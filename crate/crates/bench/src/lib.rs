//! Benchmark harness for the `are_vi` solvers: builds the regularized
//! logistic saddle-point suite (or another built-in problem), races the
//! requested methods on one shared instance, and writes CSV traces, a JSON
//! manifest and gnuplot data.
//!
//! ```no_run
//! use are_bench::{config::BenchmarkSpec, suite::run_benchmark};
//!
//! let spec = BenchmarkSpec { lambda: 0.1, out_dir: "out/lambda-0.1".into(), ..BenchmarkSpec::default() };
//! let result = run_benchmark(&spec)?;
//! std::process::exit(result.exit_code());
//! # Ok::<(), anyhow::Error>(())
//! ```

pub mod cli;
pub mod config;
pub mod output;
pub mod suite;

pub use config::{BenchmarkSpec, MethodSpec, Settings};
pub use suite::{run_benchmark, run_suite, MethodOutcome, Status, SuiteResult};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/bench.md")]
pub struct Book;
