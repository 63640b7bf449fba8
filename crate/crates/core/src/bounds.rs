//! Closed-form communication costs and an audit of the converse argument.
//!
//! All costs are exact rationals ([`Rate`]). For `u = ceil(Kc N/K)` and
//! `P = (K/N)(Nr-m+1)`:
//!
//! | quantity    | value                                                          |
//! |-------------|----------------------------------------------------------------|
//! | achievable  | `Kc Nr/m` if `Kc <= K/N`; `Kc` if `Kc >= P`; else `Nr K u / (N(m+u-1))` |
//! | converse    | `Nr Kc/(m+u-1)` if `Kc <= P`, else `Kc` (cyclic assignment)     |
//! | baseline    | `Kc Nr/m`                                                      |
//! | cut-set     | `Kc`                                                           |

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num::{BigInt, BigRational, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::assignment::cyclic_assignment;
use crate::params::{ProblemParams, Regime};
use crate::scheme::{feasibility_constraint, random_demand};
use crate::util::mod1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("{0} violates the feasibility constraint; no achievable cost is known")]
    InfeasibleRegime(ProblemParams),
    #[error("converse audit needs Kc <= (K/N)(Nr-m+1), got {0}")]
    AuditPrecondition(ProblemParams),
    #[error("converse audit mismatch at straggler set {straggler}: {detail}")]
    AuditMismatch { straggler: usize, detail: String },
}

/// An exact nonnegative rational cost, printed as `"10/3"` or `"7"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(BigRational);

impl Rate {
    pub fn new(num: i64, den: i64) -> Self {
        Rate(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn integer(n: i64) -> Self {
        Rate(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {0:?} as a fraction")]
pub struct ParseRateError(String);

impl FromStr for Rate {
    type Err = ParseRateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRateError(s.to_string());
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let num: BigInt = num.parse().map_err(|_| err())?;
        let den: BigInt = den.parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        Ok(Rate(BigRational::new(num, den)))
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! rate_op {
    ($trait:ident, $method:ident) => {
        impl $trait for Rate {
            type Output = Rate;
            fn $method(self, rhs: Rate) -> Rate {
                Rate(self.0.$method(rhs.0))
            }
        }
        impl $trait for &Rate {
            type Output = Rate;
            fn $method(self, rhs: &Rate) -> Rate {
                Rate((&self.0).$method(&rhs.0))
            }
        }
    };
}

rate_op!(Add, add);
rate_op!(Sub, sub);
rate_op!(Mul, mul);
rate_op!(Div, div);

fn ratio(num: usize, den: usize) -> Rate {
    Rate::new(num as i64, den as i64)
}

/// Cost of the scheme for the regime in force, without checking that the
/// middle-regime construction is known to exist.
pub fn achievable_formula(params: &ProblemParams) -> Rate {
    let (kc, nr, m) = (params.demands(), params.responders(), params.cost_factor());
    match params.regime() {
        Regime::SmallDemand => ratio(kc * nr, m),
        Regime::LargeDemand => ratio(kc, 1),
        Regime::Main => {
            let u = params.demand_multiplicity();
            ratio(nr * params.datasets() * u, params.workers() * (m + u - 1))
        }
    }
}

/// Cost of the scheme for the regime in force. Fails in the middle regime
/// when the feasibility constraint does not hold.
pub fn achievable_cost(params: &ProblemParams) -> Result<Rate, BoundsError> {
    if params.regime() == Regime::Main && !feasibility_constraint(params) {
        return Err(BoundsError::InfeasibleRegime(*params));
    }
    Ok(achievable_formula(params))
}

/// Lower bound on the cost of any scheme using the cyclic assignment.
pub fn converse_cyclic(params: &ProblemParams) -> Rate {
    let kc = params.demands();
    if kc <= params.large_threshold() {
        ratio(params.responders() * kc, params.submessages())
    } else {
        ratio(kc, 1)
    }
}

/// `Kc Nr / m`: one single-demand scheme per demanded row.
pub fn baseline_cost(params: &ProblemParams) -> Rate {
    ratio(params.demands() * params.responders(), params.cost_factor())
}

/// `Kc`: the master must download at least the demanded combinations.
pub fn cutset_bound(params: &ProblemParams) -> Rate {
    ratio(params.demands(), 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Matches the cut-set bound, optimal over all assignments.
    Exact,
    /// Matches the converse for cyclic assignment.
    CyclicOptimal,
    /// Within a factor of two of the cyclic converse.
    Order2,
    /// No achievable cost known at this point.
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Exact => "exact",
            Verdict::CyclicOptimal => "cyclic-optimal",
            Verdict::Order2 => "order-2",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub params: ProblemParams,
    pub regime: Regime,
    pub feasible: bool,
    #[serde(rename = "R_ach")]
    pub achievable: Option<Rate>,
    #[serde(rename = "R_converse_cyc")]
    pub converse: Rate,
    #[serde(rename = "R_cutset")]
    pub cutset: Rate,
    #[serde(rename = "R_base")]
    pub baseline: Rate,
    /// `R_ach / R_converse_cyc`.
    pub ratio: Option<Rate>,
    pub verdict: Verdict,
    /// In the middle regime: whether `R_conv >= (Kc / ((K/N)u)) R_ach`,
    /// which gives the factor-two guarantee.
    pub middle_relation: Option<bool>,
}

/// All four costs, their ratio, and the optimality verdict at one point.
pub fn optimality_report(params: &ProblemParams) -> CostReport {
    let achievable = achievable_cost(params).ok();
    let converse = converse_cyclic(params);
    let ratio = achievable.as_ref().map(|a| a / &converse);
    let regime = params.regime();
    let verdict = match &achievable {
        _ if params.demands() >= params.large_threshold() => Verdict::Exact,
        None => Verdict::Unknown,
        Some(a) if *a == converse => Verdict::CyclicOptimal,
        Some(_) => Verdict::Order2,
    };
    let middle_relation = match (&achievable, regime) {
        (Some(a), Regime::Main) => {
            let scale = Rate::new(params.demands() as i64, params.padded_demands() as i64);
            Some(converse >= &scale * a)
        }
        _ => None,
    };
    CostReport {
        params: *params,
        regime,
        feasible: feasibility_constraint(params),
        achievable,
        converse,
        cutset: cutset_bound(params),
        baseline: baseline_cost(params),
        ratio,
        verdict,
        middle_relation,
    }
}

/// One straggler pattern of the converse argument.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    /// The pattern index `n`.
    pub n: usize,
    /// Stragglers `{Mod(n, N), Mod(n-1, N), ..., Mod(n-N+Nr+1, N)}`.
    pub stragglers: Vec<usize>,
    /// `U_i = {Mod(n+m+i, N) + pN}` for `i` in `0..u`.
    pub groups: Vec<Vec<usize>>,
    /// Workers holding any dataset of `U_i`, per `i`.
    pub holders: Vec<Vec<usize>>,
    /// Non-straggling holders: their answers alone must carry `Kc L`
    /// symbols.
    pub responders: Vec<usize>,
    /// Rank of `F` restricted to the columns in the groups.
    pub rank: usize,
}

impl AuditEntry {
    /// The implied inequality, e.g. `T_1 + T_2 + T_3 >= 2L`.
    pub fn inequality(&self, demands: usize) -> String {
        let lhs: Vec<String> = self.responders.iter().map(|j| format!("T_{j}")).collect();
        format!("{} >= {}L", lhs.join(" + "), demands)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditRecord {
    pub params: ProblemParams,
    pub entries: Vec<AuditEntry>,
    pub inequalities: Vec<String>,
    /// How many entries each worker appears in as a responder.
    pub multiplicity: Vec<usize>,
    /// `sum_n T_n >= total_bound * L`.
    pub total_bound: Rate,
    /// `R >= rate_bound`, from averaging the total over `Nr` of `N` workers.
    pub rate_bound: Rate,
    pub converse: Rate,
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

fn cyclic_window(start: i64, len: usize, workers: usize) -> Vec<usize> {
    sorted((0..len as i64).map(|i| mod1(start + i, workers)).collect())
}

/// Rebuilds the counting argument behind [`converse_cyclic`] for every
/// straggler pattern and checks each count it relies on.
pub fn converse_audit<R: Rng + ?Sized>(
    params: &ProblemParams,
    rng: &mut R,
) -> Result<AuditRecord, BoundsError> {
    if params.demands() > params.large_threshold() {
        return Err(BoundsError::AuditPrecondition(*params));
    }
    let (n_workers, nr, m) = (params.workers(), params.responders(), params.cost_factor());
    let (u, kc, cycles) = (
        params.demand_multiplicity(),
        params.demands(),
        params.cycles(),
    );
    let assignment = cyclic_assignment(params);
    let mut demand = random_demand(params, rng);
    let mut resampled = false;
    let mut entries = Vec::with_capacity(n_workers);
    let mut multiplicity = vec![0usize; n_workers];

    let mut n = 1;
    while n <= n_workers {
        let mismatch = |detail: String| BoundsError::AuditMismatch {
            straggler: n,
            detail,
        };
        let ni = n as i64;
        let stragglers = cyclic_window(ni - (n_workers - nr) as i64 + 1, n_workers - nr, n_workers);
        let groups: Vec<Vec<usize>> = (0..u)
            .map(|i| {
                (0..cycles)
                    .map(|p| mod1(ni + (m + i) as i64, n_workers) + p * n_workers)
                    .collect()
            })
            .collect();
        let holders: Vec<Vec<usize>> = groups
            .iter()
            .map(|g| {
                sorted(
                    g.iter()
                        .flat_map(|&k| assignment.workers_of(k).to_vec())
                        .collect(),
                )
            })
            .collect();
        for (i, h) in holders.iter().enumerate() {
            let expect = cyclic_window(
                ni - n_workers as i64 + nr as i64 + i as i64 + 1,
                n_workers - nr + m,
                n_workers,
            );
            if *h != expect {
                return Err(mismatch(format!(
                    "holders of U_{i} are {h:?}, expected {expect:?}"
                )));
            }
        }
        let responders: Vec<usize> = sorted(holders.concat())
            .into_iter()
            .filter(|w| !stragglers.contains(w))
            .collect();
        let expect = cyclic_window(ni + 1, m + u - 1, n_workers);
        if responders != expect || responders.len() != m + u - 1 {
            return Err(mismatch(format!(
                "responding holders are {responders:?}, expected {expect:?}"
            )));
        }
        let cols: Vec<usize> = groups.concat().iter().map(|k| k - 1).collect();
        let rank = demand.select_cols(&cols).rank();
        if rank != kc {
            if resampled {
                return Err(mismatch(format!(
                    "F on the group columns has rank {rank} < {kc}"
                )));
            }
            // One fresh demand before declaring a mismatch; restart the sweep.
            demand = random_demand(params, rng);
            resampled = true;
            entries.clear();
            multiplicity.iter_mut().for_each(|x| *x = 0);
            n = 1;
            continue;
        }
        for &w in &responders {
            multiplicity[w - 1] += 1;
        }
        entries.push(AuditEntry {
            n,
            stragglers,
            groups,
            holders,
            responders,
            rank,
        });
        n += 1;
    }

    if let Some(w) = multiplicity.iter().position(|&c| c != m + u - 1) {
        return Err(BoundsError::AuditMismatch {
            straggler: 0,
            detail: format!(
                "worker {} appears {} times, expected {}",
                w + 1,
                multiplicity[w],
                m + u - 1
            ),
        });
    }
    // Summing the N inequalities counts each T_j exactly m+u-1 times.
    let total_bound = ratio(n_workers * kc, m + u - 1);
    let rate_bound = &total_bound * &ratio(nr, n_workers);
    let converse = converse_cyclic(params);
    if rate_bound != converse {
        return Err(BoundsError::AuditMismatch {
            straggler: 0,
            detail: format!("aggregate bound {rate_bound} differs from converse {converse}"),
        });
    }
    let inequalities = entries.iter().map(|e| e.inequality(kc)).collect();
    Ok(AuditRecord {
        params: *params,
        entries,
        inequalities,
        multiplicity,
        total_bound,
        rate_bound,
        converse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(k: usize, n: usize, nr: usize, kc: usize, m: usize) -> ProblemParams {
        ProblemParams::new(k, n, nr, kc, m).unwrap()
    }

    #[test]
    fn rate_formatting_and_parsing() {
        assert_eq!(Rate::new(20, 6).to_string(), "10/3");
        assert_eq!(Rate::new(14, 2).to_string(), "7");
        assert_eq!("10/3".parse::<Rate>().unwrap(), Rate::new(10, 3));
        assert_eq!("7".parse::<Rate>().unwrap(), Rate::integer(7));
        assert!("1/0".parse::<Rate>().is_err());
        assert_eq!(serde_json::to_string(&Rate::new(8, 3)).unwrap(), "\"8/3\"");
        assert!((Rate::new(10, 3).to_f64() - 3.3333333).abs() < 1e-6);
    }

    #[test]
    fn achievable_values() {
        assert_eq!(
            achievable_cost(&p(6, 6, 5, 2, 2)).unwrap(),
            Rate::new(10, 3)
        );
        assert_eq!(
            achievable_cost(&p(20, 10, 7, 2, 2)).unwrap(),
            Rate::integer(7)
        );
        assert_eq!(
            achievable_cost(&p(20, 10, 7, 12, 2)).unwrap(),
            Rate::integer(12)
        );
        assert_eq!(
            achievable_cost(&p(5, 5, 5, 2, 2)),
            Err(BoundsError::InfeasibleRegime(p(5, 5, 5, 2, 2)))
        );
    }

    #[test]
    fn converse_values() {
        assert_eq!(converse_cyclic(&p(5, 5, 4, 2, 2)), Rate::new(8, 3));
        assert_eq!(converse_cyclic(&p(6, 6, 5, 6, 2)), Rate::integer(6));
        for m in 1..=8 {
            let q = p(20, 10, 8, 8, m);
            assert_eq!(achievable_formula(&q), converse_cyclic(&q), "m = {m}");
            // u = 4 leaves the constraint violated at m = 1, 2.
            assert_eq!(achievable_cost(&q).is_ok(), m >= 3, "m = {m}");
        }
    }

    #[test]
    fn baseline_values() {
        assert_eq!(baseline_cost(&p(20, 10, 8, 8, 2)), Rate::integer(32));
        assert_eq!(baseline_cost(&p(6, 6, 5, 1, 2)), Rate::new(5, 2));
    }

    #[test]
    fn verdicts() {
        let square = optimality_report(&p(6, 6, 5, 2, 2));
        assert_eq!(square.verdict, Verdict::CyclicOptimal);
        assert_eq!(square.achievable, Some(Rate::new(10, 3)));
        let top = optimality_report(&p(20, 10, 7, 14, 2));
        assert_eq!(top.verdict, Verdict::Exact);
        assert_eq!(top.achievable, Some(Rate::integer(14)));
        let mid = optimality_report(&p(20, 10, 7, 3, 2));
        assert_eq!(mid.verdict, Verdict::Order2);
        assert_eq!(mid.ratio, Some(Rate::new(4, 3)));
        assert_eq!(mid.middle_relation, Some(true));
        let open = optimality_report(&p(5, 5, 5, 2, 2));
        assert_eq!(open.verdict, Verdict::Unknown);
        assert!(!open.feasible);
    }

    #[test]
    fn audit_of_the_five_worker_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rec = converse_audit(&p(5, 5, 4, 2, 2), &mut rng).unwrap();
        assert_eq!(rec.entries.len(), 5);
        let last = &rec.entries[4];
        assert_eq!(last.stragglers, vec![5]);
        assert_eq!(last.groups, vec![vec![2], vec![3]]);
        assert_eq!(last.responders, vec![1, 2, 3]);
        assert_eq!(rec.inequalities[4], "T_1 + T_2 + T_3 >= 2L");
        assert_eq!(rec.total_bound, Rate::new(10, 3));
        assert_eq!(rec.rate_bound, Rate::new(8, 3));
        assert_eq!(rec.multiplicity, vec![3; 5]);
    }

    #[test]
    fn audit_rejects_large_demand() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            converse_audit(&p(6, 6, 5, 6, 2), &mut rng),
            Err(BoundsError::AuditPrecondition(_))
        ));
    }
}
