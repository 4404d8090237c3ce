//! Acceptance criteria 1 to 8. Prints one line per criterion and exits
//! nonzero if any fails.

use c3bf::validate::{
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
    criterion_8, Check,
};
use std::time::Instant;

const SEED: u64 = 0;

fn main() {
    let criteria: [(u8, fn(u64) -> Vec<Check>); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let mut failed = 0;
    for (n, run) in criteria {
        let t0 = Instant::now();
        let checks = run(SEED);
        let bad: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
        let verdict = if bad.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {n}: {verdict} ({} of {} checks passed, {:.1}s)",
            checks.len() - bad.len(),
            checks.len(),
            t0.elapsed().as_secs_f64()
        );
        for c in bad {
            println!("    {c}");
        }
        if verdict == "FAIL" {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
