//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use lsc::assignment::cyclic_assignment;
use lsc::bounds::{achievable_formula, baseline_cost, converse_audit, converse_cyclic, Rate};
use lsc::cli::{main_with_args, scan_one, scan_points, ScanStatus};
use lsc::gf::{FieldMatrix, PrimeField, DEFAULT_MODULUS};
use lsc::params::{ProblemParams, Regime};
use lsc::reference;
use lsc::scheme::{
    block_diagonal_demand, build_scheme, construct_with_randomness, feasibility_constraint,
    solve_block, BlockContext, BuildOptions, Scheme, SubsetPlan,
};
use lsc::sim::{generate_messages, simulate};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < budget, || {
        format!("{what} took {elapsed:?}, budget {budget:?}")
    })
}

fn worked_block() -> Result<String, String> {
    let start = Instant::now();
    let p = reference::params();
    let f = p.field();
    let demand = reference::demand(f);
    let last = reference::last_block(f);
    let holds = cyclic_assignment(&p).masks();
    let ctx = BlockContext {
        params: &p,
        demand: &demand,
        holds: &holds,
        last_block: &last,
    };
    let sol =
        solve_block(&ctx, 1, 1, &reference::free_values(f, 1, 1)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    // Six solved entries of S (one per worker) and twelve entries of F'.
    let s = reference::transmission(f);
    let mut got = Vec::new();
    let mut want = Vec::new();
    for n in 1..=6 {
        let other = 2 - (n % 2);
        got.push(sol.s.get(n - 1, other - 1));
        want.push(s.get((n - 1) * 2, other - 1));
    }
    got.extend(sol.a.iter_rows().flatten().copied());
    want.extend(
        reference::virtual_rows(f)
            .submatrix(0..2, 0..6)
            .iter_rows()
            .flatten()
            .copied(),
    );
    ensure(got.len() == 18, || format!("{} solved values", got.len()))?;
    ensure(got == want, || {
        let show = |v: &[lsc::gf::Fe]| {
            v.iter()
                .map(|x| f.display(*x))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("got [{}], want [{}]", show(&got), show(&want))
    })?;
    within(elapsed, Duration::from_secs(1), "solve_block")?;
    Ok(format!("18 values exact in {elapsed:?}"))
}

fn worked_end_to_end() -> Result<String, String> {
    let p = reference::params();
    let f = p.field();
    let c = construct_with_randomness(
        &reference::demand(f),
        &p,
        &reference::last_block(f),
        |t, j| reference::free_values(f, t, j),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        c.transmission().matrix() == &reference::transmission(f),
        || "S differs".into(),
    )?;
    let scheme = Scheme::from_construction(c, 0);
    let messages = generate_messages(&p.with_message_len(12), &mut ChaCha8Rng::seed_from_u64(5))
        .map_err(|e| e.to_string())?;
    let sets = SubsetPlan::Exhaustive.responder_sets(6, 5);
    let out = simulate(&scheme, &messages, &sets).map_err(|e| e.to_string())?;
    ensure(out.sets_checked == 6, || {
        format!("{} sets", out.sets_checked)
    })?;
    ensure(out.failures.is_empty(), || format!("{:?}", out.failures))?;
    ensure(out.measured == Rate::new(10, 3), || {
        format!("R = {}", out.measured)
    })?;
    Ok(format!("6/6 responder sets decode, R = {}", out.measured))
}

fn converse_values() -> Result<String, String> {
    let p = ProblemParams::new(5, 5, 4, 2, 2).unwrap();
    let conv = converse_cyclic(&p);
    ensure(conv == Rate::new(8, 3), || format!("converse {conv}"))?;
    let rec = converse_audit(&p, &mut ChaCha8Rng::seed_from_u64(1)).map_err(|e| e.to_string())?;
    ensure(rec.inequalities.len() == 5, || {
        format!("{} inequalities", rec.inequalities.len())
    })?;
    for (e, ineq) in rec.entries.iter().zip(&rec.inequalities) {
        ensure(e.responders.len() == 3 && ineq.ends_with(">= 2L"), || {
            ineq.clone()
        })?;
    }
    ensure(rec.total_bound == Rate::new(10, 3), || {
        format!("total {}", rec.total_bound)
    })?;
    ensure(rec.rate_bound == conv, || {
        format!("rate bound {}", rec.rate_bound)
    })?;
    Ok(format!(
        "{}; sum T >= {}L; R >= {}",
        rec.inequalities.join(", "),
        rec.total_bound,
        conv
    ))
}

fn sweep_over_m() -> Result<String, String> {
    let start = Instant::now();
    let mut infeasible = Vec::new();
    for m in 1..=8 {
        let p = ProblemParams::new(20, 10, 8, 8, m).unwrap();
        let (ach, conv, base) = (
            achievable_formula(&p),
            converse_cyclic(&p),
            baseline_cost(&p),
        );
        ensure(ach == conv, || {
            format!("m={m}: R_ach {ach} != converse {conv}")
        })?;
        ensure(base == Rate::new(64, m as i64), || {
            format!("m={m}: R_base {base}")
        })?;
        // u as used by the scheme never exceeds Nr - m + 1.
        let u_eff = p.demand_multiplicity().min(p.responders() - m + 1);
        if u_eff > 1 {
            ensure(base > ach, || {
                format!("m={m}: R_base {base} <= R_ach {ach}")
            })?;
        }
        if p.regime() == Regime::Main && !feasibility_constraint(&p) {
            infeasible.push(m);
        }
    }
    within(start.elapsed(), Duration::from_secs(1), "sweep")?;
    Ok(format!(
        "R_ach == converse for m in 1..=8; constraint fails at m in {infeasible:?}"
    ))
}

fn sweep_over_kc() -> Result<String, String> {
    let mut equal = Vec::new();
    let mut infeasible = Vec::new();
    for kc in 1..=20 {
        let p = ProblemParams::new(20, 10, 7, kc, 2).unwrap();
        let (ach, conv) = (achievable_formula(&p), converse_cyclic(&p));
        let expected = kc <= 2 || 2 * p.demand_multiplicity() == kc || kc >= 12;
        ensure((ach == conv) == expected, || {
            format!("Kc={kc}: R_ach {ach}, converse {conv}, expected equal: {expected}")
        })?;
        if ach == conv {
            equal.push(kc);
        }
        if p.regime() == Regime::Main {
            ensure(ach <= &conv * &Rate::integer(2), || {
                format!("Kc={kc}: ratio above 2")
            })?;
            if !feasibility_constraint(&p) {
                infeasible.push(kc);
            }
        }
    }
    Ok(format!(
        "equal at Kc in {equal:?}; constraint fails at Kc in {infeasible:?}"
    ))
}

#[derive(Default)]
struct Tally {
    runs: usize,
    built: usize,
    locality: usize,
    invertible: usize,
    decoded: usize,
}

fn check_point(p: &ProblemParams, seed: u64) -> Tally {
    let mut t = Tally {
        runs: 1,
        ..Tally::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Ok(demand) = block_diagonal_demand(p, &mut rng) else {
        return t;
    };
    let Ok(scheme) = build_scheme(&demand, p, &mut rng, &BuildOptions::default()) else {
        return t;
    };
    t.built = 1;
    let c = scheme.constructions()[0];
    if c.transmit_violations().is_empty() && scheme.locality_violations().is_empty() {
        t.locality = 1;
    }
    if c.decodability(&SubsetPlan::Exhaustive).all_invertible() {
        t.invertible = 1;
    }
    let sets = SubsetPlan::Exhaustive.responder_sets(p.workers(), p.responders());
    let decoded = generate_messages(p, &mut ChaCha8Rng::seed_from_u64(!seed))
        .and_then(|w| simulate(&scheme, &w, &sets));
    if matches!(decoded, Ok(o) if o.failures.is_empty()) {
        t.decoded = 1;
    }
    t
}

fn property_suite() -> Result<String, String> {
    const SEEDS: u64 = 20;
    let start = Instant::now();
    let points: Vec<ProblemParams> = scan_points(1, 8, 1, DEFAULT_MODULUS)
        .unwrap()
        .into_iter()
        .filter(feasibility_constraint)
        .collect();
    let jobs: Vec<(ProblemParams, u64)> = points
        .iter()
        .flat_map(|p| (0..SEEDS).map(move |s| (*p, s)))
        .collect();
    let tally = jobs
        .par_iter()
        .map(|(p, s)| check_point(p, *s))
        .reduce(Tally::default, |a, b| Tally {
            runs: a.runs + b.runs,
            built: a.built + b.built,
            locality: a.locality + b.locality,
            invertible: a.invertible + b.invertible,
            decoded: a.decoded + b.decoded,
        });
    let elapsed = start.elapsed();
    let rate = tally.built as f64 / tally.runs as f64;
    ensure(rate >= 0.99, || format!("success rate {rate:.4}"))?;
    ensure(tally.locality == tally.built, || {
        format!("{} locality failures", tally.built - tally.locality)
    })?;
    ensure(tally.invertible == tally.built, || {
        format!("{} singular responder sets", tally.built - tally.invertible)
    })?;
    ensure(tally.decoded == tally.built, || {
        format!("{} decode mismatches", tally.built - tally.decoded)
    })?;
    within(elapsed, Duration::from_secs(600), "property suite")?;
    Ok(format!(
        "{} points x {SEEDS} seeds: {}/{} built, all pass (a) (b) (c), {elapsed:.1?}",
        points.len(),
        tally.built,
        tally.runs
    ))
}

fn reduction() -> Result<String, String> {
    const SEEDS: u64 = 5;
    let opts = BuildOptions::default();
    let square = scan_points(1, 6, 1, DEFAULT_MODULUS).unwrap();
    let doubled = scan_points(1, 6, 2, DEFAULT_MODULUS).unwrap();
    let pairs: Vec<(ProblemParams, ProblemParams, u64)> = square
        .iter()
        .zip(&doubled)
        .filter(|(p, _)| feasibility_constraint(p))
        .flat_map(|(a, b)| (0..SEEDS).map(move |s| (*a, *b, s)))
        .collect();
    let statuses: Vec<(ScanStatus, ScanStatus)> = pairs
        .par_iter()
        .map(|(a, b, s)| (scan_one(a, *s, &opts).status, scan_one(b, *s, &opts).status))
        .collect();
    let mismatches: Vec<String> = pairs
        .iter()
        .zip(&statuses)
        .filter(|(_, (sa, sb))| sa != sb)
        .map(|((a, b, _), (sa, sb))| format!("{a} {sa:?} vs {b} {sb:?}"))
        .collect();
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    let ok = statuses
        .iter()
        .filter(|(_, sb)| *sb == ScanStatus::Ok)
        .count();
    Ok(format!(
        "{} paired runs agree; {ok} succeed at K = 2N",
        pairs.len()
    ))
}

fn infeasible_point() -> Result<String, String> {
    let p = ProblemParams::new(5, 5, 5, 2, 2).unwrap();
    ensure(!feasibility_constraint(&p), || "constraint holds".into())?;
    let args = [
        "lsc", "run", "--K", "5", "--N", "5", "--Nr", "5", "--Kc", "2", "--m", "2",
    ];
    let code = main_with_args(args, None);
    ensure(code == 2, || format!("exit code {code}"))?;
    Ok("rejected, exit code 2".into())
}

fn random_small(field: PrimeField, rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> FieldMatrix {
    // Half of the samples are low-rank products to exercise singular cases.
    if rng.gen_bool(0.5) {
        let inner = rng.gen_range(1..=rows.min(cols));
        let a = FieldMatrix::random(field, rows, inner, rng);
        let b = FieldMatrix::random(field, inner, cols, rng);
        a.mul(&b).unwrap()
    } else {
        FieldMatrix::random(field, rows, cols, rng)
    }
}

fn gf_oracles() -> Result<String, String> {
    let f = PrimeField::new(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut singular = 0;
    for case in 0..1000 {
        let (r, c) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let m = random_small(f, &mut rng, r, c);
        ensure(m.rank() == common::brute_rank(&m), || {
            format!("case {case}: rank of {m:?}")
        })?;

        let n = rng.gen_range(1..=4);
        let a = random_small(f, &mut rng, n, n);
        let b: Vec<_> = (0..n).map(|_| f.random(&mut rng)).collect();
        let sols = common::brute_solutions(&a, &b);
        match a.solve(&b) {
            Ok(x) => ensure(sols == vec![x], || format!("case {case}: solve of {a:?}"))?,
            Err(_) => ensure(sols.len() != 1, || {
                format!("case {case}: solve refused {a:?}")
            })?,
        }
        let inv = common::brute_inverse(&a);
        ensure(a.inverse().ok() == inv, || {
            format!("case {case}: inverse of {a:?}")
        })?;
        ensure(a.is_invertible() == inv.is_some(), || {
            format!("case {case}: invertibility")
        })?;
        singular += usize::from(inv.is_none());
    }
    Ok(format!(
        "1000 cases agree ({singular} singular square samples)"
    ))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("worked instance: first (t, j) block", worked_block),
        ("worked instance: end to end", worked_end_to_end),
        ("converse values and audit", converse_values),
        ("cost sweep over m (K=20, N=10, Nr=8, Kc=8)", sweep_over_m),
        ("cost sweep over Kc (K=20, N=10, Nr=7, m=2)", sweep_over_kc),
        ("property suite N = K <= 8", property_suite),
        ("reduction K = 2N, N <= 6", reduction),
        ("infeasible point rejected", infeasible_point),
        ("field linear algebra vs brute force", gf_oracles),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let t = start.elapsed();
        match result {
            Ok(detail) => println!("[PASS] {name} ({t:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name} ({t:.2?}): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
