//! Runs every acceptance criterion and prints one line per criterion.
//! Optional arguments restrict the run to the given criterion numbers.

use std::process::ExitCode;

use adl_core::acceptance::{run, CRITERIA};

fn main() -> ExitCode {
    let ids: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids = if ids.is_empty() { (1..=CRITERIA).collect() } else { ids };
    let mut failed = 0;
    for id in ids {
        let res = run(id);
        println!("{}", res.line());
        if !res.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
