//! Master/worker simulation: messages, local encoding, straggler selection,
//! decoding, and cost measurement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{achievable_cost, BoundsError, Rate};
use crate::gf::{FieldMatrix, LinalgError};
use crate::params::{ParamError, ProblemParams, Regime};
use crate::scheme::{
    build_for_regime, random_demand, unmixing_rows, BuildOptions, Scheme, SchemeBody, SchemeError,
    SubsetPlan,
};
use crate::util::stream;

const MESSAGES: u64 = 20;
const STRAGGLERS: u64 = 21;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("invalid responder set {responders:?}: {reason}")]
    ResponderSet {
        responders: Vec<usize>,
        reason: String,
    },
    #[error("stacked transmission rows of {0:?} are singular")]
    SingularStack(Vec<usize>),
    #[error("worker {0}'s payload depends on a dataset it does not hold")]
    LocalityViolation(usize),
}

/// `K` messages of `L` symbols each. Virtual datasets carry zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageSet {
    data: FieldMatrix,
}

impl MessageSet {
    pub fn from_matrix(data: FieldMatrix) -> Self {
        MessageSet { data }
    }

    /// `K x L`, row `k-1` is `W_k`.
    pub fn matrix(&self) -> &FieldMatrix {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.cols() == 0
    }

    /// Messages cut into `segments` contiguous pieces, stacked so that row
    /// `sigma K + (k-1)` is segment `sigma` of `W_k`.
    pub fn segmented(&self, segments: usize) -> FieldMatrix {
        let (k_sets, len) = self.data.shape();
        let seg = len / segments;
        FieldMatrix::from_fn(self.data.field(), segments * k_sets, seg, |r, c| {
            self.data.get(r % k_sets, (r / k_sets) * seg + c)
        })
    }

    /// A copy with every dataset outside `keep` (1-based mask) zeroed.
    pub fn masked(&self, keep: &[bool]) -> MessageSet {
        let f = self.data.field();
        MessageSet {
            data: FieldMatrix::from_fn(f, self.data.rows(), self.data.cols(), |r, c| {
                if keep[r] {
                    self.data.get(r, c)
                } else {
                    f.zero()
                }
            }),
        }
    }
}

/// Uniform i.i.d. messages of length `L`; virtual datasets are zero.
pub fn generate_messages(
    params: &ProblemParams,
    rng: &mut impl rand::Rng,
) -> Result<MessageSet, SimError> {
    params.check_message_len()?;
    let f = params.field();
    let data = FieldMatrix::from_fn(f, params.datasets(), params.message_len(), |k, _| {
        if params.is_virtual(k + 1) {
            f.zero()
        } else {
            f.random(rng)
        }
    });
    Ok(MessageSet { data })
}

/// What one worker sends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorkerAnswer {
    pub worker: usize,
    /// One row per transmitted vector, each `L / segments` symbols long.
    pub payload: FieldMatrix,
    /// `T_n`, the number of symbols sent.
    pub symbols: usize,
}

/// Worker `n`'s answer, computed from its own datasets only. The result is
/// checked against the same product over all messages.
pub fn worker_encode(
    n: usize,
    scheme: &Scheme,
    messages: &MessageSet,
) -> Result<WorkerAnswer, SimError> {
    Encoder::new(scheme, messages)?.encode(n)
}

/// Shares the encoding matrix and segmented messages across workers.
pub struct Encoder<'a> {
    scheme: &'a Scheme,
    encoding: FieldMatrix,
    messages: &'a MessageSet,
    segments: usize,
}

impl<'a> Encoder<'a> {
    pub fn new(scheme: &'a Scheme, messages: &'a MessageSet) -> Result<Self, SimError> {
        scheme.check_message_len(messages.len())?;
        Ok(Encoder {
            scheme,
            encoding: scheme.encoding(),
            messages,
            segments: scheme.segments(),
        })
    }

    pub fn encode(&self, n: usize) -> Result<WorkerAnswer, SimError> {
        let rows = self.scheme.payload_rows();
        let coeff = self
            .encoding
            .submatrix((n - 1) * rows..n * rows, 0..self.encoding.cols());
        let mask = &self.scheme.assignment().masks()[n - 1];
        let local = self.messages.masked(mask).segmented(self.segments);
        let payload = coeff.mul(&local)?;
        let full = coeff.mul(&self.messages.segmented(self.segments))?;
        if payload != full {
            return Err(SimError::LocalityViolation(n));
        }
        let symbols = payload.rows() * payload.cols();
        Ok(WorkerAnswer {
            worker: n,
            payload,
            symbols,
        })
    }

    pub fn encode_all(&self) -> Result<Vec<WorkerAnswer>, SimError> {
        (1..=self.scheme.params().workers())
            .into_par_iter()
            .map(|n| self.encode(n))
            .collect()
    }
}

fn check_responders(scheme: &Scheme, responders: &[usize]) -> Result<(), SimError> {
    let p = scheme.params();
    let bad = |reason: &str| SimError::ResponderSet {
        responders: responders.to_vec(),
        reason: reason.to_string(),
    };
    if responders.len() != p.responders() {
        return Err(bad("size differs from Nr"));
    }
    if responders.iter().any(|&n| n == 0 || n > p.workers()) {
        return Err(bad("worker index out of range"));
    }
    if responders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("must be strictly increasing"));
    }
    Ok(())
}

/// Payload rows `range` of each responder, stacked in responder order.
fn stack_payloads(
    responders: &[usize],
    answers: &[WorkerAnswer],
    range: std::ops::Range<usize>,
) -> Result<FieldMatrix, SimError> {
    let parts =
        responders
            .iter()
            .map(|&n| {
                let a = answers.iter().find(|a| a.worker == n).ok_or_else(|| {
                    SimError::ResponderSet {
                        responders: responders.to_vec(),
                        reason: format!("no answer from worker {n}"),
                    }
                })?;
                Ok(a.payload.select_rows(&range.clone().collect::<Vec<_>>()))
            })
            .collect::<Result<Vec<_>, SimError>>()?;
    let refs: Vec<&FieldMatrix> = parts.iter().collect();
    Ok(FieldMatrix::vstack(&refs)?)
}

/// Recovers `F W` (`Kc x L`) from the answers of `responders` (sorted,
/// 1-based, exactly `Nr` workers).
pub fn master_decode(
    responders: &[usize],
    answers: &[WorkerAnswer],
    scheme: &Scheme,
) -> Result<FieldMatrix, SimError> {
    check_responders(scheme, responders)?;
    let p = scheme.params();
    let f = p.field();
    let kc = p.demands();
    let seg = answers.first().map_or(0, |a| a.payload.cols());
    let mut out = FieldMatrix::zeros(f, kc, seg * scheme.segments());
    let singular = |e: LinalgError| match e {
        LinalgError::SingularSystem => SimError::SingularStack(responders.to_vec()),
        other => other.into(),
    };

    match scheme.body() {
        SchemeBody::Main(c) => {
            let kcp = c.params().padded_demands();
            let x = stack_payloads(responders, answers, 0..kcp)?;
            let y = c
                .transmission()
                .stacked(responders)
                .inverse()
                .map_err(singular)?
                .mul(&x)?;
            for t in 0..c.params().submessages() {
                for i in 0..kc {
                    out.set_block(i, t * seg, &y.select_rows(&[t * kcp + i]));
                }
            }
        }
        SchemeBody::PerDemand { parts } => {
            for (i, part) in parts.iter().enumerate() {
                let c = part.construction();
                let x = stack_payloads(responders, answers, i..i + 1)?;
                let y = c
                    .transmission()
                    .stacked(responders)
                    .inverse()
                    .map_err(singular)?
                    .mul(&x)?;
                for t in 0..p.cost_factor() {
                    out.set_block(part.row(), t * seg, &y.select_rows(&[t]));
                }
            }
        }
        SchemeBody::Subsets {
            pieces,
            mixing,
            parts,
        } => {
            let rows = parts[0].rows().len();
            let groups = p.responders();
            let piece_len = seg * groups;
            // recovered[s][r]: f_{rows[r]} applied to the messages mixed for part s.
            let recovered = parts
                .iter()
                .enumerate()
                .map(|(s, part)| {
                    let c = part.construction();
                    let x = stack_payloads(responders, answers, s * rows..(s + 1) * rows)?;
                    let y = c
                        .transmission()
                        .stacked(responders)
                        .inverse()
                        .map_err(singular)?
                        .mul(&x)?;
                    Ok((0..rows)
                        .map(|r| {
                            FieldMatrix::from_fn(f, 1, piece_len, |_, col| {
                                y.get((col / seg) * rows + r, col % seg)
                            })
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>, SimError>>()?;
            let subsets: Vec<Vec<usize>> = parts.iter().map(|q| q.rows().to_vec()).collect();
            for i in 0..kc {
                let idx = unmixing_rows(&subsets, i);
                let stacked: Vec<&FieldMatrix> = idx
                    .iter()
                    .map(|&s| {
                        let r = subsets[s]
                            .iter()
                            .position(|&x| x == i)
                            .expect("row in subset");
                        &recovered[s][r]
                    })
                    .collect();
                let y = FieldMatrix::vstack(&stacked)?;
                let z = mixing.select_rows(&idx).inverse()?.mul(&y)?;
                for piece in 0..*pieces {
                    out.set_block(i, piece * piece_len, &z.select_rows(&[piece]));
                }
            }
        }
    }
    Ok(out)
}

/// How responder sets are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StragglerPolicy {
    /// Every `Nr`-subset (sampled beyond the subset cap).
    Exhaustive,
    /// `samples` uniformly random `Nr`-subsets.
    Random { samples: usize },
}

impl StragglerPolicy {
    pub fn responder_sets(
        &self,
        params: &ProblemParams,
        opts: &BuildOptions,
        seed: u64,
    ) -> Vec<Vec<usize>> {
        let plan = match *self {
            StragglerPolicy::Exhaustive => SubsetPlan::for_workers(params.workers(), opts, seed),
            StragglerPolicy::Random { samples } => SubsetPlan::Sampled {
                count: samples,
                seed,
            },
        };
        plan.responder_sets(params.workers(), params.responders())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecodeFailure {
    pub responders: Vec<usize>,
    pub reason: String,
}

/// Result of decoding one message set from several responder sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimOutcome {
    pub sets_checked: usize,
    pub failures: Vec<DecodeFailure>,
    /// `max_A sum_{n in A} T_n / L` over the checked sets.
    pub measured: Rate,
    pub symbols_per_worker: Vec<usize>,
}

/// Encodes at every worker and decodes from each set in `responder_sets`,
/// comparing against `F W` computed directly.
pub fn simulate(
    scheme: &Scheme,
    messages: &MessageSet,
    responder_sets: &[Vec<usize>],
) -> Result<SimOutcome, SimError> {
    let answers = Encoder::new(scheme, messages)?.encode_all()?;
    let oracle = scheme.demand().mul(messages.matrix())?;
    let failures: Vec<DecodeFailure> = responder_sets
        .par_iter()
        .filter_map(|a| {
            let reason = match master_decode(a, &answers, scheme) {
                Ok(out) if out == oracle => return None,
                Ok(_) => "decoded output differs from F W".to_string(),
                Err(e) => e.to_string(),
            };
            Some(DecodeFailure {
                responders: a.clone(),
                reason,
            })
        })
        .collect();
    let len = messages.len() as i64;
    let measured = responder_sets
        .iter()
        .map(|a| {
            let total: usize = a.iter().map(|&n| answers[n - 1].symbols).sum();
            Rate::new(total as i64, len)
        })
        .max()
        .unwrap_or_else(|| Rate::integer(0));
    Ok(SimOutcome {
        sets_checked: responder_sets.len(),
        failures,
        measured,
        symbols_per_worker: answers.iter().map(|a| a.symbols).collect(),
    })
}

/// Full run of one parameter point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub params: ProblemParams,
    pub seed: u64,
    pub regime: Regime,
    pub policy: StragglerPolicy,
    pub sets_checked: usize,
    /// The responder sets used, when there are at most 64 of them.
    pub responder_sets: Vec<Vec<usize>>,
    pub success: bool,
    #[serde(rename = "R_measured")]
    pub measured: Rate,
    #[serde(rename = "R_formula")]
    pub formula: Rate,
    pub cost_matches: bool,
    pub symbols_per_worker: Vec<usize>,
    pub construction_attempts: Vec<usize>,
    pub failures: Vec<DecodeFailure>,
}

/// One CSV row of a batch run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimRow {
    #[serde(rename = "K")]
    pub datasets: usize,
    #[serde(rename = "N")]
    pub workers: usize,
    #[serde(rename = "Nr")]
    pub responders: usize,
    #[serde(rename = "Kc")]
    pub demands: usize,
    pub m: usize,
    pub q: u64,
    pub seed: u64,
    pub regime: Regime,
    #[serde(rename = "R_measured")]
    pub measured: String,
    pub success: bool,
}

impl From<&SimReport> for SimRow {
    fn from(r: &SimReport) -> Self {
        SimRow {
            datasets: r.params.datasets(),
            workers: r.params.workers(),
            responders: r.params.responders(),
            demands: r.params.demands(),
            m: r.params.cost_factor(),
            q: r.params.modulus(),
            seed: r.seed,
            regime: r.regime,
            measured: r.measured.to_string(),
            success: r.success,
        }
    }
}

/// Builds a scheme for `params`, simulates it, and checks both recovery and
/// the cost formula. All randomness derives from `seed`.
pub fn run_experiment(
    params: &ProblemParams,
    seed: u64,
    policy: StragglerPolicy,
    opts: &BuildOptions,
) -> Result<SimReport, SimError> {
    params.check_message_len()?;
    let formula = achievable_cost(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let demand = random_demand(params, &mut rng);
    let scheme = build_for_regime(&demand, params, &mut rng, opts)?;
    let messages = generate_messages(params, &mut stream(seed, &[MESSAGES]))?;
    let sets = policy.responder_sets(params, opts, crate::util::derive_seed(seed, &[STRAGGLERS]));
    let outcome = simulate(&scheme, &messages, &sets)?;
    let cost_matches = outcome.measured == formula;
    Ok(SimReport {
        params: *params,
        seed,
        regime: scheme.regime(),
        policy,
        sets_checked: outcome.sets_checked,
        responder_sets: if sets.len() <= 64 { sets } else { Vec::new() },
        success: outcome.failures.is_empty() && cost_matches,
        measured: outcome.measured,
        formula,
        cost_matches,
        symbols_per_worker: outcome.symbols_per_worker,
        construction_attempts: scheme
            .constructions()
            .iter()
            .map(|c| c.attempts())
            .collect(),
        failures: outcome.failures,
    })
}
