//! Construction success over every small (N, Nr, m, u) with K = N.

use lsc::cli::{scan_one, scan_points, ScanStatus, ScanSummary};
use lsc::gf::DEFAULT_MODULUS;
use lsc::scheme::BuildOptions;

fn main() {
    let opts = BuildOptions::default();
    let rows: Vec<_> = scan_points(1, 6, 1, DEFAULT_MODULUS)
        .unwrap()
        .iter()
        .flat_map(|p| (0..3).map(|seed| scan_one(p, seed, &opts)))
        .collect();
    for r in rows
        .iter()
        .filter(|r| r.status == ScanStatus::Skipped && r.seed == 0)
    {
        println!(
            "skipped N={} Nr={} m={} u={}",
            r.workers, r.responders, r.m, r.u
        );
    }
    let s = ScanSummary::of(&rows);
    println!(
        "{} runs, {} skipped, {} failed",
        s.runs, s.skipped, s.failed
    );
}
