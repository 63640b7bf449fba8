use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::reference;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn first_block_of_the_reference_instance() {
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
    let sol = solve_block(&ctx, 1, 1, &reference::free_values(f, 1, 1)).unwrap();

    let s = reference::transmission(f);
    for n in 1..=6 {
        assert_eq!(sol.s.row(n - 1), &s.row((n - 1) * 2)[0..2], "s^({n},1)");
    }
    let a = reference::virtual_rows(f);
    assert_eq!(sol.a, a.submatrix(0..2, 0..6));
    assert_eq!(f.display(sol.a.get(0, 0)), "1/4");
    assert_eq!(f.display(sol.a.get(1, 5)), "-25/4");
    assert_eq!(f.display(sol.s.get(1, 0)), "3/4");
}

#[test]
fn reference_instance_end_to_end() {
    let p = reference::params();
    let f = p.field();
    let c = construct_with_randomness(
        &reference::demand(f),
        &p,
        &reference::last_block(f),
        |t, j| reference::free_values(f, t, j),
    )
    .unwrap();
    assert_eq!(c.transmission().matrix(), &reference::transmission(f));
    let eff = c.effective();
    let a = reference::virtual_rows(f);
    for i in 1..=4 {
        assert_eq!(
            eff.matrix().row(eff.virtual_row_index(i)),
            a.row(i - 1),
            "virtual row {i}"
        );
    }
    assert!(c.transmit_violations().is_empty());
    let report = c.decodability(&SubsetPlan::Exhaustive);
    assert_eq!(report.checked, 6);
    assert!(report.all_invertible());

    let scheme = Scheme::from_construction(c, 0);
    assert_eq!(scheme.cost(), Rate::new(10, 3));
}

#[test]
fn wrong_free_value_count_is_rejected() {
    let p = reference::params();
    let f = p.field();
    let err = construct_with_randomness(
        &reference::demand(f),
        &p,
        &reference::last_block(f),
        |_, _| vec![f.one(); 5],
    )
    .unwrap_err();
    assert_eq!(
        err,
        SchemeError::FreeCount {
            expected: 6,
            got: 5
        }
    );
}

#[test]
fn random_build_is_valid_and_deterministic() {
    let p = ProblemParams::new(6, 6, 5, 2, 2).unwrap();
    let demand = random_demand(&p, &mut rng(3));
    let opts = BuildOptions::default();
    let a = build_scheme(&demand, &p, &mut rng(4), &opts).unwrap();
    let b = build_scheme(&demand, &p, &mut rng(4), &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.locality_violations().is_empty());
    assert!(a
        .decodability(&SubsetPlan::Exhaustive)
        .iter()
        .all(|r| r.all_invertible()));
    assert_eq!(a.cost(), Rate::new(10, 3));
}

#[test]
fn padding_adds_rows_up_to_the_multiplicity() {
    // Kc = 3 with K/N = 2 gives u = 2, Kc' = 4.
    let p = ProblemParams::new(10, 5, 4, 3, 1).unwrap();
    assert_eq!(p.padded_demands(), 4);
    let demand = random_demand(&p, &mut rng(8));
    let s = build_scheme(&demand, &p, &mut rng(9), &BuildOptions::default()).unwrap();
    assert_eq!(s.padding_rows(), 1);
    let c = s.constructions()[0];
    assert_eq!(c.demand().submatrix(0..3, 0..10), demand);
    assert!(c.transmit_violations().is_empty());
}

#[test]
fn infeasible_point_is_refused() {
    let p = ProblemParams::new(5, 5, 5, 2, 2).unwrap();
    assert!(!feasibility_constraint(&p));
    let demand = random_demand(&p, &mut rng(1));
    let err = build_scheme(&demand, &p, &mut rng(1), &BuildOptions::default()).unwrap_err();
    assert_eq!(err, SchemeError::InfeasibleRegime(p));
}

#[test]
fn demand_shape_is_checked() {
    let p = reference::params();
    let wrong = FieldMatrix::zeros(p.field(), 3, 6);
    assert!(matches!(
        build_scheme(&wrong, &p, &mut rng(1), &BuildOptions::default()),
        Err(SchemeError::DemandShape { .. })
    ));
}

#[test]
fn single_demand_square_case_matches_the_general_construction() {
    let p = ProblemParams::new(5, 5, 4, 1, 2).unwrap();
    assert_eq!(p.regime(), Regime::SmallDemand);
    let demand = random_demand(&p, &mut rng(2));
    let opts = BuildOptions::default();
    let small = build_scheme_small_kc(&demand, &p, &mut rng(7), &opts).unwrap();
    let general = build_scheme(&demand, &p, &mut rng(7), &opts).unwrap();
    assert_eq!(small.encoding(), general.encoding());
    assert_eq!(small.cost(), general.cost());
}

#[test]
fn small_demand_regime_cost_and_locality() {
    let p = ProblemParams::new(20, 10, 7, 2, 2).unwrap();
    assert_eq!(p.regime(), Regime::SmallDemand);
    let demand = random_demand(&p, &mut rng(5));
    let s = build_for_regime(&demand, &p, &mut rng(6), &BuildOptions::default()).unwrap();
    assert_eq!(s.cost(), Rate::integer(7));
    assert_eq!(s.segments(), 2);
    assert_eq!(s.payload_rows(), 2);
    assert!(s.locality_violations().is_empty());
    assert!(s
        .decodability(&SubsetPlan::Exhaustive)
        .iter()
        .all(|r| r.all_invertible()));
}

#[test]
fn small_demand_regime_rejects_larger_demand() {
    let p = reference::params();
    let demand = random_demand(&p, &mut rng(1));
    assert!(matches!(
        build_scheme_small_kc(&demand, &p, &mut rng(1), &BuildOptions::default()),
        Err(SchemeError::WrongRegime { .. })
    ));
}

#[test]
fn large_demand_at_the_threshold_is_one_subproblem() {
    // P = Nr - m + 1 = 4 = Kc.
    let p = ProblemParams::new(6, 6, 5, 4, 2).unwrap();
    assert_eq!(p.large_threshold(), 4);
    let demand = random_demand(&p, &mut rng(1));
    let s = build_scheme_large_kc(&demand, &p, &mut rng(2), &BuildOptions::default()).unwrap();
    let SchemeBody::Subsets {
        pieces,
        parts,
        mixing,
    } = s.body()
    else {
        panic!("expected subsets body");
    };
    assert_eq!((*pieces, parts.len()), (1, 1));
    assert_eq!(mixing, &FieldMatrix::identity(p.field(), 1));
    assert_eq!(s.cost(), Rate::integer(4));
    assert!(s.locality_violations().is_empty());
}

#[test]
fn large_demand_composite_cost_is_kc() {
    // P = 3, Kc = 4: C(4,3) = 4 sub-problems, C(3,2) = 3 pieces.
    let p = ProblemParams::new(5, 5, 4, 4, 2).unwrap();
    assert_eq!(p.regime(), Regime::LargeDemand);
    let demand = random_demand(&p, &mut rng(11));
    let s = build_for_regime(&demand, &p, &mut rng(12), &BuildOptions::default()).unwrap();
    let SchemeBody::Subsets { pieces, parts, .. } = s.body() else {
        panic!("expected subsets body");
    };
    assert_eq!((*pieces, parts.len()), (3, 4));
    assert_eq!(s.cost(), Rate::integer(4));
    assert_eq!(s.segments(), 12);
    assert!(s.locality_violations().is_empty());
    assert!(s
        .decodability(&SubsetPlan::Exhaustive)
        .iter()
        .all(|r| r.all_invertible()));
}

#[test]
fn too_many_subproblems_is_an_error() {
    // P = 2, Kc = 12: C(12, 2) = 66 > 64.
    let p = ProblemParams::new(12, 12, 11, 12, 10).unwrap();
    assert_eq!(p.large_threshold(), 2);
    let demand = random_demand(&p, &mut rng(1));
    let err =
        build_scheme_large_kc(&demand, &p, &mut rng(1), &BuildOptions::default()).unwrap_err();
    assert_eq!(
        err,
        SchemeError::BinomialTooLarge {
            count: "66".into(),
            cap: 64
        }
    );
}

#[test]
fn unmixing_rows_pick_containing_subsets() {
    let subsets = vec![vec![0, 1], vec![0, 2], vec![1, 2]];
    assert_eq!(unmixing_rows(&subsets, 0), vec![0, 1]);
    assert_eq!(unmixing_rows(&subsets, 2), vec![1, 2]);
}

#[test]
fn scheme_serializes_with_fractions_of_cost() {
    let p = reference::params();
    let demand = random_demand(&p, &mut rng(3));
    let s = build_scheme(&demand, &p, &mut rng(4), &BuildOptions::default()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&s).unwrap();
    assert_eq!(v["cost"], "10/3");
    assert_eq!(v["regime"], "main");
    assert_eq!(v["body"]["kind"], "main");
}
