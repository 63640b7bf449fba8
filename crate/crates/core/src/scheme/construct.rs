//! Orchestration of Steps 1-3 for one instance of the general construction.

use itertools::Itertools;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use super::layout::{build_effective_demand, check_last_block, sample_s_last_block};
use super::layout::{EffectiveDemand, TransmissionMatrix};
use super::step2::{solve_block, solve_block_random, BlockContext, BlockSolution};
use super::{feasibility_constraint, pad_demand, BuildOptions, SchemeError};
use crate::assignment::{cyclic_assignment, Assignment};
use crate::gf::{Fe, FieldMatrix};
use crate::params::ProblemParams;
use crate::util::{binomial, stream};

// Stream labels for derived RNGs.
const PAD: u64 = 1;
const LAST: u64 = 2;
const BLOCK: u64 = 3;

/// One finished instance of the general construction: padded demand,
/// `F'` with every virtual entry solved, and `S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Construction {
    params: ProblemParams,
    assignment: Assignment,
    demand: FieldMatrix,
    padding_rows: usize,
    effective: EffectiveDemand,
    transmission: TransmissionMatrix,
    attempts: usize,
}

impl Construction {
    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    /// The padded demand (`Kc' x K`); the first `Kc` rows are the original.
    pub fn demand(&self) -> &FieldMatrix {
        &self.demand
    }

    pub fn padding_rows(&self) -> usize {
        self.padding_rows
    }

    pub fn effective(&self) -> &EffectiveDemand {
        &self.effective
    }

    pub fn transmission(&self) -> &TransmissionMatrix {
        &self.transmission
    }

    /// Full Step 1 rounds used, including the successful one.
    pub fn attempts(&self) -> usize {
        self.attempts
    }

    /// `S F'`: row `(n, j)` is the coefficient vector of `s^{n,j}` over the
    /// stacked sub-messages, column `(t-1)K + (k-1)`.
    pub fn coefficients(&self) -> FieldMatrix {
        self.transmission
            .matrix()
            .mul(self.effective.matrix())
            .expect("S and F' shapes agree by construction")
    }

    /// Every `(n, j, t, k)` with `k` not held by `n` whose coefficient is
    /// nonzero. Empty for a valid construction.
    pub fn transmit_violations(&self) -> Vec<(usize, usize, usize, usize)> {
        let coeff = self.coefficients();
        let holds = self.assignment.masks();
        let k_sets = self.params.datasets();
        let mut out = Vec::new();
        for n in 1..=self.params.workers() {
            for j in 1..=self.transmission.per_worker() {
                let row = coeff.row(self.transmission.row_of(n, j));
                for t in 1..=self.params.submessages() {
                    for k in 1..=k_sets {
                        if !holds[n - 1][k - 1] && !row[(t - 1) * k_sets + k - 1].is_zero() {
                            out.push((n, j, t, k));
                        }
                    }
                }
            }
        }
        out
    }

    /// Checks that the stacked rows of every planned responder set are
    /// invertible.
    pub fn decodability(&self, plan: &SubsetPlan) -> DecodabilityReport {
        let sets = plan.responder_sets(self.params.workers(), self.params.responders());
        let singular: Vec<Vec<usize>> = sets
            .par_iter()
            .filter(|a| !self.transmission.stacked(a).is_invertible())
            .cloned()
            .collect();
        DecodabilityReport {
            checked: sets.len(),
            total: binomial(self.params.workers(), self.params.responders()),
            exhaustive: matches!(plan, SubsetPlan::Exhaustive),
            singular,
        }
    }
}

/// Which responder sets a decodability check visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SubsetPlan {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

impl SubsetPlan {
    /// Exhaustive up to `subset_cap` workers, sampled beyond that.
    pub fn for_workers(workers: usize, opts: &BuildOptions, seed: u64) -> Self {
        if workers <= opts.subset_cap {
            SubsetPlan::Exhaustive
        } else {
            log::warn!(
                "N = {workers} exceeds the subset cap {}; sampling {} responder sets",
                opts.subset_cap,
                opts.sampled_subsets
            );
            SubsetPlan::Sampled {
                count: opts.sampled_subsets,
                seed,
            }
        }
    }

    /// Responder sets as sorted 1-based worker lists.
    pub fn responder_sets(&self, workers: usize, responders: usize) -> Vec<Vec<usize>> {
        match *self {
            SubsetPlan::Exhaustive => (1..=workers).combinations(responders).collect(),
            SubsetPlan::Sampled { count, seed } => {
                let mut rng = stream(seed, &[0x5e75]);
                (0..count)
                    .map(|_| {
                        let mut a: Vec<usize> = sample(&mut rng, workers, responders)
                            .into_iter()
                            .map(|x| x + 1)
                            .collect();
                        a.sort_unstable();
                        a
                    })
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecodabilityReport {
    pub checked: usize,
    /// `C(N, Nr)`, when it fits in a `u64`.
    pub total: Option<u64>,
    pub exhaustive: bool,
    pub singular: Vec<Vec<usize>>,
}

impl DecodabilityReport {
    pub fn all_invertible(&self) -> bool {
        self.singular.is_empty()
    }
}

fn block_pairs(params: &ProblemParams) -> Vec<(usize, usize)> {
    (1..=params.submessages())
        .cartesian_product(1..=params.padded_demands())
        .collect()
}

/// Preconditions shared by every entry point of the general construction.
pub(crate) fn check_main_preconditions(params: &ProblemParams) -> Result<(), SchemeError> {
    if params.stripe_width().is_none() || !feasibility_constraint(params) {
        return Err(SchemeError::InfeasibleRegime(*params));
    }
    Ok(())
}

fn assemble(
    params: &ProblemParams,
    demand: FieldMatrix,
    last_block: &FieldMatrix,
    solutions: Vec<BlockSolution>,
    attempts: usize,
) -> Result<Construction, SchemeError> {
    let mut effective = build_effective_demand(&demand, params)?;
    let mut transmission = TransmissionMatrix::new(params, last_block);
    let w = params.stripe_width().unwrap_or(0);
    for sol in solutions {
        for n in 1..=params.workers() {
            transmission.set_block_entries(n, sol.j, sol.t, sol.s.row(n - 1));
        }
        for i3 in 0..w {
            effective.set_virtual((sol.j - 1) * w + i3 + 1, sol.t, sol.a.row(i3));
        }
    }
    debug_assert!(effective.is_complete());
    Ok(Construction {
        params: *params,
        assignment: cyclic_assignment(params),
        padding_rows: params.padded_demands() - params.demands(),
        demand,
        effective,
        transmission,
        attempts,
    })
}

/// Runs Steps 1-3 from a root seed. Each Step 1 round and each `(t, j)`
/// retry draws from its own derived stream, so the result does not depend
/// on scheduling.
pub(crate) fn construct_main(
    demand: &FieldMatrix,
    params: &ProblemParams,
    root: u64,
    opts: &BuildOptions,
) -> Result<Construction, SchemeError> {
    check_main_preconditions(params)?;
    let holds = cyclic_assignment(params).masks();
    let plan = SubsetPlan::for_workers(params.workers(), opts, root);
    let pairs = block_pairs(params);
    let mut last_reason = String::new();

    for attempt in 0..=opts.max_retries {
        let round = attempt as u64;
        let padded = pad_demand(demand, params, &mut stream(root, &[PAD, round]))?;
        let last_block = sample_s_last_block(params, &mut stream(root, &[LAST, round]))?;
        let ctx = BlockContext {
            params,
            demand: &padded,
            holds: &holds,
            last_block: &last_block,
        };
        let solved: Result<Vec<Option<BlockSolution>>, SchemeError> = pairs
            .par_iter()
            .map(|&(t, j)| {
                for retry in 0..=opts.max_retries {
                    let mut rng = stream(root, &[BLOCK, round, t as u64, j as u64, retry as u64]);
                    match solve_block_random(&ctx, t, j, &mut rng) {
                        Ok(sol) => return Ok(Some(sol)),
                        Err(SchemeError::SingularBlock { .. }) => continue,
                        Err(e) => return Err(e),
                    }
                }
                Ok(None)
            })
            .collect();
        let solved = solved?;
        if let Some(pos) = solved.iter().position(Option::is_none) {
            let (t, j) = pairs[pos];
            last_reason = format!("block (t={t}, j={j}) stayed singular");
            log::debug!("{params}: round {attempt}: {last_reason}");
            continue;
        }
        let solutions = solved.into_iter().flatten().collect();
        let c = assemble(params, padded, &last_block, solutions, attempt + 1)?;

        let violations = c.transmit_violations();
        if !violations.is_empty() {
            return Err(SchemeError::ConstraintResidual {
                t: violations[0].2,
                j: violations[0].1,
            });
        }
        let report = c.decodability(&plan);
        if report.all_invertible() {
            return Ok(c);
        }
        last_reason = format!(
            "{} responder set(s) singular, e.g. {:?}",
            report.singular.len(),
            report.singular[0]
        );
        log::debug!("{params}: round {attempt}: {last_reason}");
    }
    Err(SchemeError::ConstructionFailed {
        params: *params,
        attempts: opts.max_retries + 1,
        reason: last_reason,
    })
}

/// Runs Steps 1-3 with all randomness supplied: the padded demand, the
/// last block of `S`, and the free values of each `(t, j)` system. No
/// retries; decodability is checked exhaustively.
pub fn construct_with_randomness(
    padded_demand: &FieldMatrix,
    params: &ProblemParams,
    last_block: &FieldMatrix,
    free_values: impl Fn(usize, usize) -> Vec<Fe>,
) -> Result<Construction, SchemeError> {
    check_main_preconditions(params)?;
    let expected = (params.padded_demands(), params.datasets());
    if padded_demand.shape() != expected {
        return Err(SchemeError::DemandShape {
            expected,
            got: padded_demand.shape(),
        });
    }
    check_last_block(params, last_block)?;
    let holds = cyclic_assignment(params).masks();
    let ctx = BlockContext {
        params,
        demand: padded_demand,
        holds: &holds,
        last_block,
    };
    let solutions = block_pairs(params)
        .into_iter()
        .map(|(t, j)| solve_block(&ctx, t, j, &free_values(t, j)))
        .collect::<Result<Vec<_>, _>>()?;
    let c = assemble(params, padded_demand.clone(), last_block, solutions, 1)?;
    let report = c.decodability(&SubsetPlan::Exhaustive);
    if !report.all_invertible() {
        return Err(SchemeError::ConstructionFailed {
            params: *params,
            attempts: 1,
            reason: format!("responder set {:?} singular", report.singular[0]),
        });
    }
    Ok(c)
}
