//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use vmor_bench::acceptance::{run_all, CRITERIA};

fn main() {
    // `cargo test -- <filter>` narrows the criteria; flags are ignored
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let outcomes = run_all(filter.as_deref());
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} of {} passed ({} criteria defined)", outcomes.len() - failed, outcomes.len(), CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
