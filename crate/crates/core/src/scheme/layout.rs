//! Layouts of the effective demand matrix `F'` and the transmission
//! matrix `S`.
//!
//! ```text
//!            K cols   K cols        K cols
//!          +--------+--------+---+--------+
//!  Kc' rows|   F    |        |   |        |   group 1
//!          +--------+--------+---+--------+
//!  Kc' rows|        |   F    |   |        |   group 2
//!          +--------+--------+---+--------+
//!             ...                 ...
//!          +--------+--------+---+--------+
//!  Kc' rows|        |        |   |   F    |   group m+u-1
//!          +--------+--------+---+--------+
//!   v rows |  a_{i,k}: solved block by block  |   virtual rows
//!          +----------------------------------+
//! ```
//!
//! `S` has one row per transmitted vector `s^{n,j}` (worker `n`, `j` in
//! `[Kc']`) and columns split into `m+u-1` blocks of width `Kc'` followed by
//! the last block of width `v`. In the last block, row `(n, j)` is zero
//! outside stripe `j`, which spans `Nr-m-u+1` columns.

use std::ops::Range;

use rand::Rng;

use super::SchemeError;
use crate::gf::{Fe, FieldMatrix};
use crate::params::ProblemParams;

/// `F'` together with a record of which virtual entries have been solved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectiveDemand {
    matrix: FieldMatrix,
    demand_rows: usize,
    groups: usize,
    datasets: usize,
    virtual_rows: usize,
    /// `resolved[i * groups + t]`: virtual row `i`, column block `t` (0-based).
    resolved: Vec<bool>,
}

impl EffectiveDemand {
    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    /// `Kc'`.
    pub fn demand_rows(&self) -> usize {
        self.demand_rows
    }

    /// `m + u - 1`.
    pub fn groups(&self) -> usize {
        self.groups
    }

    /// `v`.
    pub fn virtual_rows(&self) -> usize {
        self.virtual_rows
    }

    /// Row index (0-based) of virtual row `i` (1-based).
    pub fn virtual_row_index(&self, i: usize) -> usize {
        self.groups * self.demand_rows + i - 1
    }

    /// Column range of block `t` (1-based).
    pub fn block_cols(&self, t: usize) -> Range<usize> {
        (t - 1) * self.datasets..t * self.datasets
    }

    /// `F'_t`, the columns multiplying sub-messages of group `t`.
    pub fn block(&self, t: usize) -> FieldMatrix {
        self.matrix
            .submatrix(0..self.matrix.rows(), self.block_cols(t))
    }

    /// `a_{i, col}` with both indices 1-based; `None` until solved.
    pub fn virtual_entry(&self, i: usize, col: usize) -> Option<Fe> {
        let t = (col - 1) / self.datasets;
        self.resolved[(i - 1) * self.groups + t]
            .then(|| self.matrix.get(self.virtual_row_index(i), col - 1))
    }

    /// Writes the `K` entries of virtual row `i` (1-based) in block `t`.
    pub(crate) fn set_virtual(&mut self, i: usize, t: usize, values: &[Fe]) {
        let r = self.virtual_row_index(i);
        for (k, &x) in values.iter().enumerate() {
            self.matrix.set(r, (t - 1) * self.datasets + k, x);
        }
        self.resolved[(i - 1) * self.groups + (t - 1)] = true;
    }

    pub fn is_complete(&self) -> bool {
        self.resolved.iter().all(|&b| b)
    }
}

/// Lays out `F'` for a padded demand `F` of shape `Kc' x K`. Virtual rows
/// start zeroed and unresolved.
pub fn build_effective_demand(
    demand: &FieldMatrix,
    params: &ProblemParams,
) -> Result<EffectiveDemand, SchemeError> {
    let kcp = params.padded_demands();
    let k = params.datasets();
    if demand.shape() != (kcp, k) {
        return Err(SchemeError::DemandShape {
            expected: (kcp, k),
            got: demand.shape(),
        });
    }
    let v = params
        .virtual_rows()
        .ok_or(SchemeError::InfeasibleRegime(*params))?;
    let groups = params.submessages();
    let mut matrix = FieldMatrix::zeros(demand.field(), params.responders() * kcp, k * groups);
    for t in 0..groups {
        matrix.set_block(t * kcp, t * k, demand);
    }
    Ok(EffectiveDemand {
        matrix,
        demand_rows: kcp,
        groups,
        datasets: k,
        virtual_rows: v,
        resolved: vec![false; v * groups],
    })
}

/// `S`, with helpers for its row and column block structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransmissionMatrix {
    matrix: FieldMatrix,
    workers: usize,
    per_worker: usize,
    groups: usize,
    stripe: usize,
}

impl TransmissionMatrix {
    pub(crate) fn new(params: &ProblemParams, last_block: &FieldMatrix) -> Self {
        let kcp = params.padded_demands();
        let groups = params.submessages();
        let mut matrix = FieldMatrix::zeros(
            last_block.field(),
            params.workers() * kcp,
            params.responders() * kcp,
        );
        matrix.set_block(0, groups * kcp, last_block);
        TransmissionMatrix {
            matrix,
            workers: params.workers(),
            per_worker: kcp,
            groups,
            stripe: params.stripe_width().unwrap_or(0),
        }
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    /// Vectors sent by each worker (`Kc'`).
    pub fn per_worker(&self) -> usize {
        self.per_worker
    }

    /// Row index (0-based) of `s^{n,j}`, both 1-based.
    pub fn row_of(&self, n: usize, j: usize) -> usize {
        (n - 1) * self.per_worker + (j - 1)
    }

    /// Column range of block `t` (1-based); `t = m+u` is the last block.
    pub fn block_cols(&self, t: usize) -> Range<usize> {
        let start = (t - 1) * self.per_worker;
        if t == self.groups + 1 {
            start..self.matrix.cols()
        } else {
            start..start + self.per_worker
        }
    }

    pub fn block(&self, t: usize) -> FieldMatrix {
        self.matrix
            .submatrix(0..self.matrix.rows(), self.block_cols(t))
    }

    pub fn last_block(&self) -> FieldMatrix {
        self.block(self.groups + 1)
    }

    /// Rows of worker `n` (1-based).
    pub fn worker_rows(&self, n: usize) -> FieldMatrix {
        self.matrix.submatrix(
            self.row_of(n, 1)..self.row_of(n, 1) + self.per_worker,
            0..self.matrix.cols(),
        )
    }

    /// Rows of the workers in `responders` (1-based), in the given order.
    pub fn stacked(&self, responders: &[usize]) -> FieldMatrix {
        let idx: Vec<usize> = responders
            .iter()
            .flat_map(|&n| (1..=self.per_worker).map(move |j| (n, j)))
            .map(|(n, j)| self.row_of(n, j))
            .collect();
        self.matrix.select_rows(&idx)
    }

    pub(crate) fn set_block_entries(&mut self, n: usize, j: usize, t: usize, values: &[Fe]) {
        let r = self.row_of(n, j);
        let c0 = (t - 1) * self.per_worker;
        for (i, &x) in values.iter().enumerate() {
            self.matrix.set(r, c0 + i, x);
        }
    }

    /// Whether the last block has the striped zero pattern.
    pub fn is_striped(&self) -> bool {
        let cols = self.block_cols(self.groups + 1);
        (1..=self.workers).all(|n| {
            (1..=self.per_worker).all(|j| {
                let stripe = (j - 1) * self.stripe..j * self.stripe;
                cols.clone().enumerate().all(|(c, col)| {
                    stripe.contains(&c) || self.matrix.get(self.row_of(n, j), col).is_zero()
                })
            })
        })
    }
}

/// Step 1: the last column block of `S`, shape `N Kc' x v`. Row `(n, j)`
/// gets uniform random entries in stripe `j` and zeros elsewhere.
pub fn sample_s_last_block<R: Rng + ?Sized>(
    params: &ProblemParams,
    rng: &mut R,
) -> Result<FieldMatrix, SchemeError> {
    let kcp = params.padded_demands();
    let w = params
        .stripe_width()
        .ok_or(SchemeError::InfeasibleRegime(*params))?;
    let f = params.field();
    let mut block = FieldMatrix::zeros(f, params.workers() * kcp, w * kcp);
    for n in 0..params.workers() {
        for j in 0..kcp {
            for c in j * w..(j + 1) * w {
                block.set(n * kcp + j, c, f.random(rng));
            }
        }
    }
    Ok(block)
}

/// Checks that a candidate last block has the shape and stripe pattern
/// [`sample_s_last_block`] produces.
pub fn check_last_block(params: &ProblemParams, block: &FieldMatrix) -> Result<(), SchemeError> {
    let kcp = params.padded_demands();
    let w = params
        .stripe_width()
        .ok_or(SchemeError::InfeasibleRegime(*params))?;
    let expected = (params.workers() * kcp, w * kcp);
    if block.shape() != expected {
        return Err(SchemeError::LastBlockShape {
            expected,
            got: block.shape(),
        });
    }
    for r in 0..block.rows() {
        let j = r % kcp;
        for c in 0..block.cols() {
            if !(j * w..(j + 1) * w).contains(&c) && !block.get(r, c).is_zero() {
                return Err(SchemeError::LastBlockPattern { row: r, col: c });
            }
        }
    }
    Ok(())
}
