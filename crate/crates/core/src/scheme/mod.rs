//! Encoding-scheme synthesis for all three demand regimes.
//!
//! The general construction ([`build_scheme`]) lays out the effective demand
//! `F'` and the transmission matrix `S`, then:
//!
//! 1. fills the last column block of `S` with striped random entries,
//! 2. solves one square linear system per `(t, j)` so every transmitted
//!    vector only involves datasets its worker holds,
//! 3. checks that every `Nr`-subset of workers yields an invertible stacked
//!    matrix, restarting with fresh randomness otherwise.
//!
//! [`build_scheme_small_kc`] and [`build_scheme_large_kc`] cover the two
//! outer regimes by composing several general constructions.

mod construct;
mod demand;
mod layout;
mod step2;

pub use construct::{construct_with_randomness, Construction, DecodabilityReport, SubsetPlan};
pub use demand::{block_diagonal_demand, pad_demand, random_demand};
pub use layout::{
    build_effective_demand, check_last_block, sample_s_last_block, EffectiveDemand,
    TransmissionMatrix,
};
pub use step2::{
    free_count, free_positions, solve_block, solve_block_random, BlockContext, BlockSolution,
};

use itertools::Itertools;
use num::{BigInt, BigRational};
use rand::Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::assignment::{cyclic_assignment, Assignment};
use crate::bounds::Rate;
use crate::gf::{Fe, FieldMatrix, LinalgError};
use crate::params::{ParamError, ProblemParams, Regime};
use crate::util::{binomial, derive_seed, mod1, stream};
use construct::construct_main;

const PART: u64 = 10;
const MIX: u64 = 11;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{0} violates N >= (m+u-1)/u + u(Nr-m-u+1) or has u > Nr-m+1")]
    InfeasibleRegime(ProblemParams),
    #[error("{params} is in the {actual} regime, not {expected}")]
    WrongRegime {
        params: ProblemParams,
        expected: Regime,
        actual: Regime,
    },
    #[error("demand matrix must be {expected:?}, got {got:?}")]
    DemandShape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("last block of S must be {expected:?}, got {got:?}")]
    LastBlockShape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("last block of S has a nonzero entry off its stripe at ({row}, {col})")]
    LastBlockPattern { row: usize, col: usize },
    #[error("block index (t={t}, j={j}) out of range")]
    BlockIndex { t: usize, j: usize },
    #[error("expected {expected} free values, got {got}")]
    FreeCount { expected: usize, got: usize },
    #[error("step-2 system is not square: {equations} equations, {unknowns} unknowns")]
    SystemSize { equations: usize, unknowns: usize },
    #[error("step-2 system for (t={t}, j={j}) is singular")]
    SingularBlock { t: usize, j: usize },
    #[error("transmit constraint left a nonzero residual in block (t={t}, j={j})")]
    ConstraintResidual { t: usize, j: usize },
    #[error("construction for {params} failed after {attempts} attempts: {reason}")]
    ConstructionFailed {
        params: ProblemParams,
        attempts: usize,
        reason: String,
    },
    #[error("{count} sub-problems exceed the cap of {cap}")]
    BinomialTooLarge { count: String, cap: usize },
}

/// Knobs for randomized construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BuildOptions {
    /// Fresh draws per `(t, j)` block, and also full Step 1 restarts.
    pub max_retries: usize,
    /// Largest `N` for which every responder set is checked.
    pub subset_cap: usize,
    /// Responder sets sampled when `N` exceeds `subset_cap`.
    pub sampled_subsets: usize,
    /// Largest sub-problem count accepted in the large-`Kc` regime.
    pub max_subproblems: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_retries: 8,
            subset_cap: 20,
            sampled_subsets: 2048,
            max_subproblems: 64,
        }
    }
}

/// `u = ceil(Kc N / K)`.
pub fn compute_u(params: &ProblemParams) -> usize {
    params.demand_multiplicity()
}

/// `(m+u-1)/u + u(Nr-m-u+1) <= N`, in exact arithmetic.
pub fn feasibility_constraint(params: &ProblemParams) -> bool {
    let u = params.demand_multiplicity() as i64;
    let m = params.cost_factor() as i64;
    let nr = params.responders() as i64;
    let lhs = BigRational::new(BigInt::from(m + u - 1), BigInt::from(u))
        + BigRational::from_integer(BigInt::from(u * (nr - m - u + 1)));
    lhs <= BigRational::from_integer(BigInt::from(params.workers()))
}

/// One single-demand construction over merged messages. Merged message `g`
/// is `sum_p (F[row][g+pN] / scale_g) W_{g+pN}`, and the merged demand on it
/// is `scale_g`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MergedPart {
    row: usize,
    scales: Vec<Fe>,
    construction: Construction,
}

impl MergedPart {
    /// Demand row (0-based) this part serves.
    pub fn row(&self) -> usize {
        self.row
    }

    pub fn scales(&self) -> &[Fe] {
        &self.scales
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }
}

/// One `P`-row sub-problem of the large-`Kc` regime, run on messages mixed
/// across pieces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubsetPart {
    rows: Vec<usize>,
    construction: Construction,
}

impl SubsetPart {
    /// Demand rows (0-based) in this sub-problem.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeBody {
    Main(Box<Construction>),
    PerDemand {
        parts: Vec<MergedPart>,
    },
    Subsets {
        /// Pieces each message is cut into, `C(Kc-1, P-1)`.
        pieces: usize,
        /// Row `s`: mixing coefficients of sub-problem `s` over the pieces.
        mixing: FieldMatrix,
        parts: Vec<SubsetPart>,
    },
}

/// A complete scheme for one parameter point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scheme {
    params: ProblemParams,
    seed: u64,
    regime: Regime,
    demand: FieldMatrix,
    assignment: Assignment,
    body: SchemeBody,
}

impl Scheme {
    /// Wraps a finished general construction. The demand is the first `Kc`
    /// rows of its padded demand.
    pub fn from_construction(construction: Construction, seed: u64) -> Self {
        let params = *construction.params();
        let demand = construction
            .demand()
            .submatrix(0..params.demands(), 0..params.datasets());
        Scheme {
            params,
            seed,
            regime: Regime::Main,
            demand,
            assignment: construction.assignment().clone(),
            body: SchemeBody::Main(Box::new(construction)),
        }
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    /// Root seed all randomness of this scheme was derived from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The construction used, which may differ from `params.regime()` when
    /// [`build_scheme`] is applied outside the middle regime.
    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `F`, `Kc x K`.
    pub fn demand(&self) -> &FieldMatrix {
        &self.demand
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn body(&self) -> &SchemeBody {
        &self.body
    }

    /// Every general construction inside this scheme.
    pub fn constructions(&self) -> Vec<&Construction> {
        match &self.body {
            SchemeBody::Main(c) => vec![c],
            SchemeBody::PerDemand { parts } => parts.iter().map(|p| &p.construction).collect(),
            SchemeBody::Subsets { parts, .. } => parts.iter().map(|p| &p.construction).collect(),
        }
    }

    /// Rows added to `F` by padding (main body only).
    pub fn padding_rows(&self) -> usize {
        match &self.body {
            SchemeBody::Main(c) => c.padding_rows(),
            _ => 0,
        }
    }

    /// Equal-length segments each message is cut into for encoding.
    pub fn segments(&self) -> usize {
        match &self.body {
            SchemeBody::Main(c) => c.params().submessages(),
            SchemeBody::PerDemand { .. } => self.params.cost_factor(),
            SchemeBody::Subsets { pieces, .. } => pieces * self.params.responders(),
        }
    }

    /// Segment-length vectors each worker sends.
    pub fn payload_rows(&self) -> usize {
        match &self.body {
            SchemeBody::Main(c) => c.params().padded_demands(),
            SchemeBody::PerDemand { parts } => parts.len(),
            SchemeBody::Subsets { parts, .. } => {
                parts.len() * parts.first().map_or(0, |p| p.rows.len())
            }
        }
    }

    /// Message length divisor: `L` must be a multiple of [`segments`](Self::segments).
    pub fn check_message_len(&self, len: usize) -> Result<usize, ParamError> {
        let s = self.segments();
        if len == 0 || !len.is_multiple_of(s) {
            return Err(ParamError::IndivisibleL { len, divisor: s });
        }
        Ok(len / s)
    }

    /// Encoding coefficients for all workers: row `(n-1) R + r` (with `R`
    /// = [`payload_rows`](Self::payload_rows)) gives the `r`-th vector of
    /// worker `n` as a combination of message segments, column
    /// `sigma K + (k-1)` for segment `sigma` of `W_k`.
    pub fn encoding(&self) -> FieldMatrix {
        if let SchemeBody::Main(c) = &self.body {
            return c.coefficients();
        }
        let f = self.params.field();
        let k_sets = self.params.datasets();
        let n_workers = self.params.workers();
        let rows = self.payload_rows();
        let mut out = FieldMatrix::zeros(f, n_workers * rows, self.segments() * k_sets);
        match &self.body {
            SchemeBody::Main(_) => unreachable!("handled above"),
            SchemeBody::PerDemand { parts } => {
                for (i, part) in parts.iter().enumerate() {
                    let coeff = part.construction.coefficients();
                    let sub_n = part.construction.params().datasets();
                    for n in 0..n_workers {
                        for t in 0..self.params.cost_factor() {
                            for k in 1..=k_sets {
                                let g = mod1(k as i64, sub_n);
                                let weight = f
                                    .div(self.demand.get(part.row, k - 1), part.scales[g - 1])
                                    .expect("scales are nonzero");
                                let c = coeff.get(n, t * sub_n + g - 1);
                                out.set(n * rows + i, t * k_sets + k - 1, f.mul(c, weight));
                            }
                        }
                    }
                }
            }
            SchemeBody::Subsets {
                pieces,
                mixing,
                parts,
            } => {
                let p_rows = parts.first().map_or(0, |p| p.rows.len());
                let groups = self.params.responders();
                for (s, part) in parts.iter().enumerate() {
                    let coeff = part.construction.coefficients();
                    for n in 0..n_workers {
                        for r in 0..p_rows {
                            let src = coeff.row(n * p_rows + r);
                            for piece in 0..*pieces {
                                let alpha = mixing.get(s, piece);
                                for t in 0..groups {
                                    for k in 0..k_sets {
                                        let sigma = piece * groups + t;
                                        out.set(
                                            n * rows + s * p_rows + r,
                                            sigma * k_sets + k,
                                            f.mul(src[t * k_sets + k], alpha),
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Every `(worker, row, segment, dataset)` where a worker's encoding
    /// touches a dataset it does not hold. Empty for a valid scheme.
    pub fn locality_violations(&self) -> Vec<(usize, usize, usize, usize)> {
        let enc = self.encoding();
        let holds = self.assignment.masks();
        let rows = self.payload_rows();
        let k_sets = self.params.datasets();
        let mut out = Vec::new();
        for (n, held) in holds.iter().enumerate() {
            for r in 0..rows {
                for (col, x) in enc.row(n * rows + r).iter().enumerate() {
                    let k = col % k_sets;
                    if !x.is_zero() && !held[k] {
                        out.push((n + 1, r + 1, col / k_sets + 1, k + 1));
                    }
                }
            }
        }
        out
    }

    /// Decodability of every inner construction under `plan`.
    pub fn decodability(&self, plan: &SubsetPlan) -> Vec<DecodabilityReport> {
        self.constructions()
            .iter()
            .map(|c| c.decodability(plan))
            .collect()
    }

    /// Cost of this construction: downloaded symbols per message symbol.
    pub fn cost(&self) -> Rate {
        Rate::new(
            (self.params.responders() * self.payload_rows()) as i64,
            self.segments() as i64,
        )
    }
}

impl Serialize for Scheme {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Scheme", 7)?;
        st.serialize_field("params", &self.params)?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("regime", &self.regime)?;
        st.serialize_field("F", &self.demand)?;
        st.serialize_field("padding_rows", &self.padding_rows())?;
        st.serialize_field("cost", &self.cost())?;
        st.serialize_field("body", &self.body)?;
        st.end()
    }
}

impl Serialize for Construction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Construction", 6)?;
        st.serialize_field("params", self.params())?;
        st.serialize_field("padding_rows", &self.padding_rows())?;
        st.serialize_field("F_padded", self.demand())?;
        st.serialize_field("F_prime", self.effective().matrix())?;
        st.serialize_field("S", self.transmission().matrix())?;
        st.serialize_field("attempts", &self.attempts())?;
        st.end()
    }
}

fn check_demand(demand: &FieldMatrix, params: &ProblemParams) -> Result<(), SchemeError> {
    let expected = (params.demands(), params.datasets());
    if demand.shape() != expected {
        return Err(SchemeError::DemandShape {
            expected,
            got: demand.shape(),
        });
    }
    if demand.field() != params.field() {
        return Err(LinalgError::FieldMismatch(demand.field().modulus(), params.modulus()).into());
    }
    Ok(())
}

/// The general construction. Accepts any point with `u <= Nr-m+1` that
/// satisfies [`feasibility_constraint`]; outside the middle regime it is
/// valid but not cost-optimal.
pub fn build_scheme<R: Rng + ?Sized>(
    demand: &FieldMatrix,
    params: &ProblemParams,
    rng: &mut R,
    opts: &BuildOptions,
) -> Result<Scheme, SchemeError> {
    check_demand(demand, params)?;
    let root = rng.next_u64();
    let c = construct_main(demand, params, root, opts)?;
    Ok(Scheme::from_construction(c, root))
}

/// `Kc <= K/N`: one single-demand construction per demanded row, each over
/// `N` merged messages (datasets `g, g+N, g+2N, ...` share a worker set).
pub fn build_scheme_small_kc<R: Rng + ?Sized>(
    demand: &FieldMatrix,
    params: &ProblemParams,
    rng: &mut R,
    opts: &BuildOptions,
) -> Result<Scheme, SchemeError> {
    check_demand(demand, params)?;
    if params.demands() > params.cycles() {
        return Err(SchemeError::WrongRegime {
            params: *params,
            expected: Regime::SmallDemand,
            actual: params.regime(),
        });
    }
    let root = rng.next_u64();
    let f = params.field();
    let n = params.workers();
    let sub = params.with_shape(n, n, 1)?;
    let rows = params.demands();
    let parts = (0..rows)
        .into_par_iter()
        .map(|i| {
            let scales: Vec<Fe> = (0..n)
                .map(|g| {
                    let x = demand.get(i, g);
                    if x.is_zero() {
                        f.one()
                    } else {
                        x
                    }
                })
                .collect();
            let merged = FieldMatrix::from_rows(f, vec![scales.clone()])?;
            let seed = if rows == 1 {
                root
            } else {
                derive_seed(root, &[PART, i as u64])
            };
            let construction = construct_main(&merged, &sub, seed, opts)?;
            Ok(MergedPart {
                row: i,
                scales,
                construction,
            })
        })
        .collect::<Result<Vec<_>, SchemeError>>()?;
    Ok(Scheme {
        params: *params,
        seed: root,
        regime: Regime::SmallDemand,
        demand: demand.clone(),
        assignment: cyclic_assignment(params),
        body: SchemeBody::PerDemand { parts },
    })
}

/// `Kc >= P = (K/N)(Nr-m+1)`: every message is cut into `C(Kc-1, P-1)`
/// contiguous pieces, and each of the `C(Kc, P)` row subsets `T` runs a
/// general construction with demand `F_T` on messages mixed across pieces
/// by a random invertible-by-row pattern. Each demanded row appears in
/// exactly `C(Kc-1, P-1)` subsets, enough to unmix all of its pieces.
pub fn build_scheme_large_kc<R: Rng + ?Sized>(
    demand: &FieldMatrix,
    params: &ProblemParams,
    rng: &mut R,
    opts: &BuildOptions,
) -> Result<Scheme, SchemeError> {
    check_demand(demand, params)?;
    let p = params.large_threshold();
    let kc = params.demands();
    if kc < p {
        return Err(SchemeError::WrongRegime {
            params: *params,
            expected: Regime::LargeDemand,
            actual: params.regime(),
        });
    }
    let count = binomial(kc, p);
    let too_large = || SchemeError::BinomialTooLarge {
        count: count.map_or_else(|| format!("C({kc},{p})"), |c| c.to_string()),
        cap: opts.max_subproblems,
    };
    let count = count
        .and_then(|c| usize::try_from(c).ok())
        .filter(|&c| c <= opts.max_subproblems)
        .ok_or_else(too_large)?;
    let pieces = binomial(kc - 1, p - 1).expect("bounded by the subset count") as usize;
    let subsets: Vec<Vec<usize>> = (0..kc).combinations(p).collect();
    debug_assert_eq!(subsets.len(), count);

    let root = rng.next_u64();
    let f = params.field();
    let unmix: Vec<Vec<usize>> = (0..kc).map(|i| unmixing_rows(&subsets, i)).collect();
    debug_assert!(unmix.iter().all(|rows| rows.len() == pieces));
    let mixing = if count == 1 {
        FieldMatrix::identity(f, 1)
    } else {
        (0..=opts.max_retries)
            .map(|attempt| {
                FieldMatrix::random(f, count, pieces, &mut stream(root, &[MIX, attempt as u64]))
            })
            .find(|alpha| {
                unmix
                    .iter()
                    .all(|rows| alpha.select_rows(rows).is_invertible())
            })
            .ok_or_else(|| SchemeError::ConstructionFailed {
                params: *params,
                attempts: opts.max_retries + 1,
                reason: "no invertible mixing pattern found".into(),
            })?
    };

    let sub = params.with_shape(params.datasets(), params.workers(), p)?;
    let parts = subsets
        .par_iter()
        .enumerate()
        .map(|(s, rows)| {
            let seed = if count == 1 {
                root
            } else {
                derive_seed(root, &[PART, s as u64])
            };
            let construction = construct_main(&demand.select_rows(rows), &sub, seed, opts)?;
            Ok(SubsetPart {
                rows: rows.clone(),
                construction,
            })
        })
        .collect::<Result<Vec<_>, SchemeError>>()?;
    Ok(Scheme {
        params: *params,
        seed: root,
        regime: Regime::LargeDemand,
        demand: demand.clone(),
        assignment: cyclic_assignment(params),
        body: SchemeBody::Subsets {
            pieces,
            mixing,
            parts,
        },
    })
}

/// Indices of the subsets containing demand row `i`, in subset order.
pub fn unmixing_rows(subsets: &[Vec<usize>], i: usize) -> Vec<usize> {
    subsets
        .iter()
        .enumerate()
        .filter(|(_, rows)| rows.contains(&i))
        .map(|(s, _)| s)
        .collect()
}

/// Picks the construction matching `params.regime()`.
pub fn build_for_regime<R: Rng + ?Sized>(
    demand: &FieldMatrix,
    params: &ProblemParams,
    rng: &mut R,
    opts: &BuildOptions,
) -> Result<Scheme, SchemeError> {
    match params.regime() {
        Regime::SmallDemand => build_scheme_small_kc(demand, params, rng, opts),
        Regime::Main => build_scheme(demand, params, rng, opts),
        Regime::LargeDemand => build_scheme_large_kc(demand, params, rng, opts),
    }
}

#[cfg(test)]
mod tests;
