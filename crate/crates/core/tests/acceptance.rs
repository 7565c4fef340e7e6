//! Full-scale acceptance run: one line per criterion, nonzero exit on any
//! failure. Set `COUNTERWALK_SEED` to change the pinned seed.

use std::process::ExitCode;
use std::time::Instant;

use counterwalk::verify::suite::{Suite, SuiteConfig, CRITERIA};

const DEFAULT_SEED: u64 = 42;

fn main() -> ExitCode {
    let seed = std::env::var("COUNTERWALK_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    let suite = Suite::new(SuiteConfig { seed, fast: false });
    println!("acceptance suite, seed {seed}");

    let mut failed = 0;
    for criterion in CRITERIA {
        let start = Instant::now();
        let reports = suite.run(criterion.id);
        let ok = !reports.is_empty() && reports.iter().all(|r| r.pass);
        println!(
            "criterion {:>2} {} {} ({} checks, {:.1}s)",
            criterion.id,
            if ok { "PASS" } else { "FAIL" },
            criterion.title,
            reports.len(),
            start.elapsed().as_secs_f64()
        );
        for r in &reports {
            let mark = if r.pass { "ok  " } else { "FAIL" };
            println!("      {mark} {}: {:.6e} <= {:.6e}", r.name, r.value, r.threshold);
        }
        if !ok {
            failed += 1;
        }
    }

    if failed == 0 {
        println!("all {} criteria passed", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", CRITERIA.len());
        ExitCode::FAILURE
    }
}
