mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lsc::assignment::{cyclic_assignment, validate_assignment};
use lsc::bounds::{achievable_cost, baseline_cost, converse_cyclic, optimality_report, Rate};
use lsc::gf::{FieldMatrix, PrimeField};
use lsc::params::{ProblemParams, Regime};
use lsc::scheme::{build_for_regime, random_demand, BuildOptions, SchemeError};

fn small_field() -> PrimeField {
    PrimeField::new(5).unwrap()
}

fn matrix(rows: usize, cols: usize, seed: u64) -> FieldMatrix {
    FieldMatrix::random(
        small_field(),
        rows,
        cols,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

/// Any valid `(K, N, Nr, Kc, m)` with `N | K`.
fn params() -> impl Strategy<Value = ProblemParams> {
    (1usize..=7, 1usize..=3)
        .prop_flat_map(|(n, c)| (Just(n), Just(c), 1..=n))
        .prop_flat_map(|(n, c, nr)| (Just(n), Just(c), Just(nr), 1..=nr, 1..=n * c))
        .prop_map(|(n, c, nr, m, kc)| ProblemParams::new(n * c, n, nr, kc, m).unwrap())
}

proptest! {
    #[test]
    fn field_ops_agree_with_integer_arithmetic(a in 0u64..1_000_000, b in 1u64..1_000_000) {
        let f = PrimeField::default();
        let q = f.modulus() as u128;
        let (x, y) = (f.elem(a), f.elem(b));
        prop_assert_eq!(f.mul(x, y).value() as u128, (a as u128 * b as u128) % q);
        prop_assert_eq!(f.mul(f.div(x, y).unwrap(), y), x);
        prop_assert_eq!(f.add(f.sub(x, y), y), x);
    }

    #[test]
    fn matrix_product_is_associative(
        (r, k, l, c) in (1usize..5, 1usize..5, 1usize..5, 1usize..5),
        seed in any::<u64>(),
    ) {
        let (a, b, d) = (matrix(r, k, seed), matrix(k, l, seed ^ 1), matrix(l, c, seed ^ 2));
        let left = a.mul(&b).unwrap().mul(&d).unwrap();
        let right = a.mul(&b.mul(&d).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn rank_matches_span_count(r in 1usize..=4, c in 1usize..=4, seed in any::<u64>()) {
        let m = matrix(r, c, seed);
        prop_assert_eq!(m.rank(), common::brute_rank(&m));
        prop_assert_eq!(m.transpose().rank(), m.rank());
    }

    #[test]
    fn solve_and_inverse_round_trip(n in 1usize..=6, seed in any::<u64>()) {
        let f = PrimeField::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = FieldMatrix::random(f, n, n, &mut rng);
        let b: Vec<_> = (0..n).map(|_| f.random(&mut rng)).collect();
        if let Ok(x) = a.solve(&b) {
            prop_assert_eq!(a.mul_vec(&x).unwrap(), b);
            let inv = a.inverse().unwrap();
            prop_assert_eq!(a.mul(&inv).unwrap(), FieldMatrix::identity(f, n));
            prop_assert_eq!(inv.mul(&a).unwrap(), FieldMatrix::identity(f, n));
        } else {
            prop_assert!(a.rank() < n);
        }
    }

    #[test]
    fn cyclic_assignment_is_balanced(p in params()) {
        let a = cyclic_assignment(&p);
        let load = p.workers() - p.responders() + p.cost_factor();
        let total: usize = (1..=p.workers()).map(|n| a.datasets_of(n).len()).sum();
        prop_assert_eq!(total, p.datasets() * load);
        for k in 1..=p.datasets() {
            prop_assert_eq!(a.workers_of(k).len(), load);
            for &n in a.workers_of(k) {
                prop_assert!(a.datasets_of(n).contains(&k));
            }
        }
        prop_assert!(validate_assignment(&a, &p).is_valid());
    }

    #[test]
    fn cost_ordering(p in params()) {
        let conv = converse_cyclic(&p);
        prop_assert!(conv >= Rate::integer(p.demands() as i64));
        if let Ok(ach) = achievable_cost(&p) {
            prop_assert!(ach >= conv);
            // Padding Kc up to Kc' can make the scheme worse than the baseline.
            if p.regime() != Regime::Main || p.demands() == p.padded_demands() {
                prop_assert!(baseline_cost(&p) >= ach);
            }
            if p.regime() == Regime::Main {
                prop_assert!(ach <= &conv * &Rate::integer(2));
            }
        }
        let report = optimality_report(&p);
        prop_assert_ne!(report.middle_relation, Some(false));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schemes_are_deterministic_and_local(p in params(), seed in any::<u64>()) {
        prop_assume!(achievable_cost(&p).is_ok());
        let opts = BuildOptions { max_subproblems: 16, ..BuildOptions::default() };
        let build = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let demand = random_demand(&p, &mut rng);
            build_for_regime(&demand, &p, &mut rng, &opts)
        };
        let first = build();
        prop_assert_eq!(&first, &build());
        match first {
            Ok(s) => {
                prop_assert!(s.locality_violations().is_empty());
                prop_assert_eq!(s.cost(), achievable_cost(&p).unwrap());
            }
            Err(SchemeError::BinomialTooLarge { .. }) => {}
            Err(e) => prop_assert!(false, "{p}: {e}"),
        }
    }
}

#[test]
fn padding_can_lose_to_the_baseline() {
    let p = ProblemParams::new(18, 6, 4, 4, 3).unwrap();
    assert_eq!(p.regime(), Regime::Main);
    assert_eq!(p.padded_demands(), 6);
    assert_eq!(achievable_cost(&p).unwrap(), Rate::integer(6));
    assert_eq!(baseline_cost(&p), Rate::new(16, 3));
}
