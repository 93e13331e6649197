//! Acceptance suite: the twelve criteria, one pass/fail line each.
//!
//! Runs as a plain binary (`harness = false`) so that every criterion is reported even
//! when an earlier one fails. `ACCEPTANCE_ONLY=6,9` restricts the run to a subset.

use htwave::checks::{run_criterion, CRITERION_COUNT};

fn main() {
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|p| p.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for n in 1..=CRITERION_COUNT {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let report = run_criterion(n, 0).expect("criterion exists");
        println!("{}", report.line());
        if !report.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
