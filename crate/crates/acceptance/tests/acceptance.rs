use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use are_vi_acceptance::{Ledger, CHECKS};

fn main() {
    let ledger = Ledger::default();
    let mut failed = Vec::new();
    for check in &CHECKS {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| (check.run)(&ledger)));
        let secs = start.elapsed().as_secs_f64();
        let (passed, detail) = match outcome {
            Ok(Ok(v)) => (v.passed, v.detail),
            Ok(Err(e)) => (false, format!("error: {e:#}")),
            Err(_) => (false, "panicked".to_string()),
        };
        println!(
            "criterion {} {:<32} {} ({secs:.1}s) {detail}",
            check.id,
            check.name,
            if passed { "PASS" } else { "FAIL" }
        );
        if !passed {
            failed.push(check.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", CHECKS.len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
