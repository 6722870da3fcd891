//! Runs every built-in check and prints one line per check.

use sobdde::analysis::{run_verify_suite, VerifyConfig};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let report = run_verify_suite(&VerifyConfig {
        seed,
        ..Default::default()
    });
    for c in &report.checks {
        println!(
            "{:<28} {:<4} observed {:.3e}  bound {:.3e}",
            c.name,
            if c.passed { "ok" } else { "FAIL" },
            c.observed,
            c.bound
        );
    }
    println!("suite {}", if report.passed { "passed" } else { "failed" });
}
