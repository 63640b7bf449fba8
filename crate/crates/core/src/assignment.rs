//! Cyclic dataset placement.
//!
//! Dataset `k` goes to the `N - Nr + m` consecutive workers ending at
//! `Mod(k, N)` and counting down:
//!
//! ```text
//! H_k = { Mod(k, N), Mod(k-1, N), ..., Mod(k-N+Nr-m+1, N) }
//! Z_n = U_{p=0}^{K/N-1} { Mod(n, N) + pN, ..., Mod(n+N-Nr+m-1, N) + pN }
//! ```
//!
//! All worker and dataset labels are 1-based.

use serde::{Deserialize, Serialize};

use crate::params::{ParamError, ProblemParams};
use crate::util::mod1;

/// Which datasets each worker holds (`Z`) and which workers hold each
/// dataset (`H`). Both are 1-based and kept mutually consistent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    #[serde(rename = "Z")]
    per_worker: Vec<Vec<usize>>,
    #[serde(rename = "H")]
    per_dataset: Vec<Vec<usize>>,
}

impl Assignment {
    /// Builds an assignment from worker sets, deriving `H` by duality.
    /// Labels outside `1..=datasets` are dropped from `H` and reported by
    /// [`validate_assignment`].
    pub fn from_worker_sets(per_worker: Vec<Vec<usize>>, datasets: usize) -> Self {
        let mut per_dataset = vec![Vec::new(); datasets];
        for (n, z) in per_worker.iter().enumerate() {
            for &k in z {
                if (1..=datasets).contains(&k) {
                    per_dataset[k - 1].push(n + 1);
                }
            }
        }
        Assignment {
            per_worker,
            per_dataset,
        }
    }

    /// The cyclic assignment for `K` datasets over `N` workers, each
    /// dataset replicated `N - Nr + m` times.
    pub fn cyclic(
        datasets: usize,
        workers: usize,
        responders: usize,
        cost_factor: usize,
    ) -> Result<Self, ParamError> {
        if workers == 0 || !datasets.is_multiple_of(workers) {
            return Err(ParamError::MustPadFirst { datasets, workers });
        }
        let reps = workers - responders + cost_factor;
        let cycles = datasets / workers;
        let per_worker = (1..=workers)
            .map(|n| {
                (0..cycles)
                    .flat_map(|p| {
                        (0..reps).map(move |i| mod1((n + i) as i64, workers) + p * workers)
                    })
                    .collect()
            })
            .collect();
        let per_dataset = (1..=datasets)
            .map(|k| {
                (0..reps)
                    .map(|i| mod1(k as i64 - i as i64, workers))
                    .collect()
            })
            .collect();
        Ok(Assignment {
            per_worker,
            per_dataset,
        })
    }

    pub fn workers(&self) -> usize {
        self.per_worker.len()
    }

    pub fn datasets(&self) -> usize {
        self.per_dataset.len()
    }

    /// `Z_n`.
    pub fn datasets_of(&self, worker: usize) -> &[usize] {
        &self.per_worker[worker - 1]
    }

    /// `H_k`.
    pub fn workers_of(&self, dataset: usize) -> &[usize] {
        &self.per_dataset[dataset - 1]
    }

    pub fn holds(&self, worker: usize, dataset: usize) -> bool {
        self.per_worker[worker - 1].contains(&dataset)
    }

    /// Per-worker membership masks over datasets, 0-based.
    pub fn masks(&self) -> Vec<Vec<bool>> {
        self.per_worker
            .iter()
            .map(|z| {
                let mut mask = vec![false; self.datasets()];
                for &k in z {
                    if (1..=self.datasets()).contains(&k) {
                        mask[k - 1] = true;
                    }
                }
                mask
            })
            .collect()
    }
}

/// The cyclic assignment for a validated parameter point.
pub fn cyclic_assignment(params: &ProblemParams) -> Assignment {
    Assignment::cyclic(
        params.datasets(),
        params.workers(),
        params.responders(),
        params.cost_factor(),
    )
    .expect("ProblemParams guarantees N | K")
}

/// Result of rounding `K` up to a multiple of `N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PaddedDatasets {
    pub padded: usize,
    /// 1-based labels of the added virtual datasets.
    pub virtual_ids: Vec<usize>,
}

/// `K' = ceil(K/N) N`; datasets `K+1..=K'` are virtual.
pub fn pad_virtual_datasets(datasets: usize, workers: usize) -> PaddedDatasets {
    let padded = datasets.div_ceil(workers) * workers;
    PaddedDatasets {
        padded,
        virtual_ids: (datasets + 1..=padded).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Overloaded {
        worker: usize,
        held: usize,
        limit: usize,
    },
    UnknownDataset {
        worker: usize,
        dataset: usize,
    },
    /// `k` is in `Z_n` but `n` is missing from `H_k`, or the reverse.
    DualityBroken {
        worker: usize,
        dataset: usize,
    },
    WrongShape {
        workers: usize,
        datasets: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AssignmentReport {
    pub violations: Vec<Violation>,
}

impl AssignmentReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the load limit `|Z_n| <= M` and `Z`/`H` duality.
pub fn validate_assignment(a: &Assignment, params: &ProblemParams) -> AssignmentReport {
    let mut violations = Vec::new();
    if a.workers() != params.workers() || a.datasets() != params.datasets() {
        violations.push(Violation::WrongShape {
            workers: a.workers(),
            datasets: a.datasets(),
        });
        return AssignmentReport { violations };
    }
    let limit = params.computation_load();
    for n in 1..=a.workers() {
        let z = a.datasets_of(n);
        if z.len() > limit {
            violations.push(Violation::Overloaded {
                worker: n,
                held: z.len(),
                limit,
            });
        }
        for &k in z {
            if !(1..=a.datasets()).contains(&k) {
                violations.push(Violation::UnknownDataset {
                    worker: n,
                    dataset: k,
                });
            } else if !a.workers_of(k).contains(&n) {
                violations.push(Violation::DualityBroken {
                    worker: n,
                    dataset: k,
                });
            }
        }
    }
    for k in 1..=a.datasets() {
        for &n in a.workers_of(k) {
            if !(1..=a.workers()).contains(&n) || !a.datasets_of(n).contains(&k) {
                violations.push(Violation::DualityBroken {
                    worker: n,
                    dataset: k,
                });
            }
        }
    }
    AssignmentReport { violations }
}
