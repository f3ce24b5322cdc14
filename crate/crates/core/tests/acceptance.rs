//! One PASS/FAIL line per acceptance criterion.
//!
//! `cargo test --test acceptance -- 3 7` runs a subset; other arguments
//! (libtest flags forwarded by cargo) are ignored.

use std::process::ExitCode;

use samp_core::checks::{run_check, CRITERIA};

fn main() -> ExitCode {
    let wanted: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<u8> = CRITERIA
        .iter()
        .map(|(id, _)| *id)
        .filter(|id| wanted.is_empty() || wanted.contains(id))
        .collect();
    let mut failed = 0;
    for id in &ids {
        let outcome = run_check(*id).expect("known criterion");
        println!("{}", outcome.line());
        failed += usize::from(!outcome.passed);
    }
    println!("acceptance: {} passed, {failed} failed", ids.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
