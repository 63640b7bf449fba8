//! System parameters and the quantities derived from them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{LinalgError, PrimeField, DEFAULT_MODULUS};
use crate::util::binomial;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("need 1 <= m <= Nr <= N, got m = {m}, Nr = {responders}, N = {workers}")]
    Ordering {
        m: usize,
        responders: usize,
        workers: usize,
    },
    #[error("need 1 <= Kc <= K, got Kc = {demands}, K = {datasets}")]
    DemandsOutOfRange { demands: usize, datasets: usize },
    #[error("N = {workers} does not divide K = {datasets}; pad with virtual datasets first")]
    MustPadFirst { datasets: usize, workers: usize },
    #[error("L = {len} is not divisible by {divisor}")]
    IndivisibleL { len: usize, divisor: usize },
    #[error("message length divisor overflows for this parameter point")]
    DivisorOverflow,
    #[error(transparent)]
    Field(#[from] LinalgError),
}

/// Which of the three demand regimes a parameter point falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `Kc <= K/N`: one independent single-demand scheme per demanded row.
    #[serde(rename = "small-Kc")]
    SmallDemand,
    /// `K/N < Kc < (K/N)(Nr-m+1)`: the general construction.
    #[serde(rename = "main")]
    Main,
    /// `Kc >= (K/N)(Nr-m+1)`: split into sub-combinations, cost `Kc`.
    #[serde(rename = "large-Kc")]
    LargeDemand,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SmallDemand => "small-Kc",
            Regime::Main => "main",
            Regime::LargeDemand => "large-Kc",
        })
    }
}

/// A validated problem instance `(K, N, Nr, Kc, m)` plus field modulus `q`
/// and message length `L`.
///
/// `K` here is always a multiple of `N`. When built through
/// [`ProblemParams::padded`], the trailing `K - real_datasets` datasets are
/// virtual and carry zero messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(rename = "K")]
    datasets: usize,
    #[serde(rename = "N")]
    workers: usize,
    #[serde(rename = "Nr")]
    responders: usize,
    #[serde(rename = "Kc")]
    demands: usize,
    #[serde(rename = "m")]
    cost_factor: usize,
    #[serde(rename = "q")]
    field: PrimeField,
    #[serde(rename = "L")]
    message_len: usize,
    #[serde(rename = "K_real")]
    real_datasets: usize,
}

impl ProblemParams {
    /// Validates `(K, N, Nr, Kc, m)` with the default modulus. `L` defaults
    /// to the smallest length the regime's message splitting accepts.
    pub fn new(
        datasets: usize,
        workers: usize,
        responders: usize,
        demands: usize,
        cost_factor: usize,
    ) -> Result<Self, ParamError> {
        for (name, v) in [
            ("K", datasets),
            ("N", workers),
            ("Nr", responders),
            ("Kc", demands),
            ("m", cost_factor),
        ] {
            if v == 0 {
                return Err(ParamError::Zero(name));
            }
        }
        if !(cost_factor <= responders && responders <= workers) {
            return Err(ParamError::Ordering {
                m: cost_factor,
                responders,
                workers,
            });
        }
        if demands > datasets {
            return Err(ParamError::DemandsOutOfRange { demands, datasets });
        }
        if !datasets.is_multiple_of(workers) {
            return Err(ParamError::MustPadFirst { datasets, workers });
        }
        let mut p = ProblemParams {
            datasets,
            workers,
            responders,
            demands,
            cost_factor,
            field: PrimeField::new(DEFAULT_MODULUS)?,
            message_len: 1,
            real_datasets: datasets,
        };
        p.message_len = p.min_message_len().unwrap_or(1);
        Ok(p)
    }

    /// Like [`new`](Self::new) but rounds `K` up to a multiple of `N`,
    /// recording the added datasets as virtual.
    pub fn padded(
        datasets: usize,
        workers: usize,
        responders: usize,
        demands: usize,
        cost_factor: usize,
    ) -> Result<Self, ParamError> {
        if demands > datasets {
            return Err(ParamError::DemandsOutOfRange { demands, datasets });
        }
        if workers == 0 {
            return Err(ParamError::Zero("N"));
        }
        let padded = crate::assignment::pad_virtual_datasets(datasets, workers).padded;
        let mut p = Self::new(padded, workers, responders, demands, cost_factor)?;
        p.real_datasets = datasets;
        Ok(p)
    }

    pub fn with_modulus(mut self, q: u64) -> Result<Self, ParamError> {
        self.field = PrimeField::new(q)?;
        Ok(self)
    }

    /// Sets `L`; checked against the regime when messages are generated.
    pub fn with_message_len(mut self, len: usize) -> Self {
        self.message_len = len;
        self
    }

    /// The same point with a different demand count (used by sub-problems).
    pub(crate) fn with_shape(
        &self,
        datasets: usize,
        workers: usize,
        demands: usize,
    ) -> Result<Self, ParamError> {
        let p = Self::new(
            datasets,
            workers,
            self.responders,
            demands,
            self.cost_factor,
        )?;
        Ok(ProblemParams {
            field: self.field,
            message_len: self.message_len,
            ..p
        })
    }

    /// `K`, including virtual datasets.
    pub fn datasets(&self) -> usize {
        self.datasets
    }

    /// Datasets with real (possibly nonzero) messages.
    pub fn real_datasets(&self) -> usize {
        self.real_datasets
    }

    pub fn is_virtual(&self, k: usize) -> bool {
        k > self.real_datasets
    }

    /// `N`.
    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `Nr`, the number of workers the master waits for.
    pub fn responders(&self) -> usize {
        self.responders
    }

    /// `Kc`, the number of demanded linear combinations.
    pub fn demands(&self) -> usize {
        self.demands
    }

    /// `m`.
    pub fn cost_factor(&self) -> usize {
        self.cost_factor
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn modulus(&self) -> u64 {
        self.field.modulus()
    }

    /// `L`.
    pub fn message_len(&self) -> usize {
        self.message_len
    }

    /// `K/N`.
    pub fn cycles(&self) -> usize {
        self.datasets / self.workers
    }

    /// `N - Nr + m`, the number of workers holding each dataset.
    pub fn replication(&self) -> usize {
        self.workers - self.responders + self.cost_factor
    }

    /// `M = (K/N)(N - Nr + m)`, datasets per worker.
    pub fn computation_load(&self) -> usize {
        self.cycles() * self.replication()
    }

    /// `u = ceil(Kc N / K)`.
    pub fn demand_multiplicity(&self) -> usize {
        (self.demands * self.workers).div_ceil(self.datasets)
    }

    /// `Kc' = (K/N) u`, the demand count after padding.
    pub fn padded_demands(&self) -> usize {
        self.cycles() * self.demand_multiplicity()
    }

    /// `m + u - 1`, the number of sub-messages each message is split into.
    pub fn submessages(&self) -> usize {
        self.cost_factor + self.demand_multiplicity() - 1
    }

    /// `Nr - m - u + 1`, the width of one stripe of virtual rows.
    /// `None` when `u > Nr - m + 1`.
    pub fn stripe_width(&self) -> Option<usize> {
        (self.responders + 1).checked_sub(self.cost_factor + self.demand_multiplicity())
    }

    /// `v = Kc' (Nr - m - u + 1)`, the number of virtual demand rows.
    pub fn virtual_rows(&self) -> Option<usize> {
        self.stripe_width().map(|w| w * self.padded_demands())
    }

    /// `(K/N)(Nr - m + 1)`, the demand count from which cost `Kc` is optimal.
    pub fn large_threshold(&self) -> usize {
        self.cycles() * (self.responders - self.cost_factor + 1)
    }

    pub fn regime(&self) -> Regime {
        if self.demands <= self.cycles() {
            Regime::SmallDemand
        } else if self.demands >= self.large_threshold() {
            Regime::LargeDemand
        } else {
            Regime::Main
        }
    }

    /// The number `L` must be divisible by for this point's regime.
    pub fn message_len_divisor(&self) -> Result<usize, ParamError> {
        Ok(match self.regime() {
            Regime::SmallDemand => self.cost_factor,
            Regime::Main => self.submessages(),
            Regime::LargeDemand => {
                let p = self.large_threshold();
                binomial(self.demands - 1, p - 1)
                    .and_then(|c| c.checked_mul(self.responders as u64))
                    .and_then(|c| usize::try_from(c).ok())
                    .ok_or(ParamError::DivisorOverflow)?
            }
        })
    }

    pub fn min_message_len(&self) -> Result<usize, ParamError> {
        self.message_len_divisor()
    }

    pub fn check_message_len(&self) -> Result<(), ParamError> {
        let divisor = self.message_len_divisor()?;
        if self.message_len == 0 || !self.message_len.is_multiple_of(divisor) {
            return Err(ParamError::IndivisibleL {
                len: self.message_len,
                divisor,
            });
        }
        Ok(())
    }
}

impl fmt::Display for ProblemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(K={}, N={}, Nr={}, Kc={}, m={})",
            self.datasets, self.workers, self.responders, self.demands, self.cost_factor
        )
    }
}
