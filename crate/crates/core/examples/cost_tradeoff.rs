//! Cost tables: achievable, converse and baseline over m and over Kc.

use lsc::bounds::{achievable_formula, baseline_cost, converse_cyclic, optimality_report};
use lsc::params::ProblemParams;

fn main() {
    println!("K=20 N=10 Nr=8 Kc=8");
    println!(
        "{:>3} {:>8} {:>8} {:>8} {:>9}",
        "m", "R_ach", "R_conv", "R_base", "feasible"
    );
    for m in 1..=8 {
        let p = ProblemParams::new(20, 10, 8, 8, m).unwrap();
        let r = optimality_report(&p);
        println!(
            "{m:>3} {:>8} {:>8} {:>8} {:>9}",
            achievable_formula(&p).to_string(),
            converse_cyclic(&p).to_string(),
            baseline_cost(&p).to_string(),
            r.feasible
        );
    }

    println!("\nK=20 N=10 Nr=7 m=2");
    println!(
        "{:>3} {:>8} {:>8} {:>8} {:>15}",
        "Kc", "R_ach", "R_conv", "R_base", "verdict"
    );
    for kc in 1..=20 {
        let p = ProblemParams::new(20, 10, 7, kc, 2).unwrap();
        let r = optimality_report(&p);
        println!(
            "{kc:>3} {:>8} {:>8} {:>8} {:>15}",
            achievable_formula(&p).to_string(),
            r.converse.to_string(),
            r.baseline.to_string(),
            r.verdict.to_string()
        );
    }
}
