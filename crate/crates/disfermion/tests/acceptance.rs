// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance battery: one PASS/FAIL line per criterion.
//!
//! Criterion 4 asks for the unrestricted and the disjoint path sums to agree
//! pointwise. They do not (an explicit counterexample is printed), so the
//! criterion is reported as FAIL and does not fail the run. Any other failure
//! does, and so would criterion 4 erroring out instead of producing a verdict.

use std::process::ExitCode;

use disfermion::suite;

/// Criteria known to fail as stated, with the reason.
const KNOWN_FAILURES: &[(u8, &str)] = &[(4, "unrestricted path sums differ from the disjoint form pointwise")];

fn main() -> ExitCode {
    // Share the monomial family cache between runs of the test targets.
    std::env::set_var("DISFERMION_CACHE", env!("CARGO_TARGET_TMPDIR"));
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<u8> = if only.is_empty() { (1..=suite::N_CRITERIA).collect() } else { only };

    let mut unexpected = Vec::new();
    let mut passed = 0;
    for id in &ids {
        let o = suite::run(*id);
        println!("{}", o.line());
        match o.passed {
            Some(true) => passed += 1,
            _ => {
                let known = KNOWN_FAILURES.iter().find(|(k, _)| k == id);
                match known {
                    Some((_, why)) if !o.detail.starts_with("error:") => println!("     known failure: {why}"),
                    _ => unexpected.push(*id),
                }
            }
        }
    }
    println!("{passed}/{} criteria pass", ids.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
