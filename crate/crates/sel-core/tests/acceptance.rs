//! Runs the ten acceptance criteria and prints one line per criterion.
//!
//! Criterion 5 cannot pass: the discrete (0, 2) problem has solutions whose
//! boundary ratio grows with n. It is still run and reported.

use std::process::ExitCode;

use sel_core::acceptance::{run_criterion, CRITERIA, UNATTAINABLE};

fn main() -> ExitCode {
    let mut passed = 0;
    let mut known = 0;
    let mut unexpected = Vec::new();
    for id in 1..=CRITERIA {
        let outcome = run_criterion(id);
        println!("{outcome}");
        if outcome.pass {
            passed += 1;
        } else if UNATTAINABLE.contains(&id) {
            known += 1;
        } else {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed} passed, {known} known unattainable, {} unexpected failures", unexpected.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
