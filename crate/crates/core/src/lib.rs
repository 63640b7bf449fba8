//! Straggler-tolerant distributed linearly separable computation.
//!
//! A master wants `Kc` linear combinations (the rows of a demand matrix `F`)
//! of `K` messages, each the output of one dataset. `N` workers each hold
//! `N - Nr + m` datasets under a cyclic assignment and send `Kc' / (m+u-1)`
//! message-lengths worth of symbols; any `Nr` of them must be enough to
//! recover `F W`. All arithmetic is over a prime field `GF(q)`.
//!
//! Modules:
//!
//! - [`gf`]: prime-field elements and dense matrices with exact elimination.
//! - [`params`]: validated problem parameters and derived quantities.
//! - [`assignment`]: the cyclic dataset assignment and its checks.
//! - [`scheme`]: encoding-matrix synthesis for every demand regime.
//! - [`sim`]: encoding, straggler sampling and decoding end to end.
//! - [`bounds`]: achievable, converse and baseline costs, and the converse
//!   audit.
//! - [`cli`]: the experiment runner behind the `lsc` binary.
//!
//! ```
//! use lsc::params::ProblemParams;
//! use lsc::bounds::{achievable_cost, Rate};
//!
//! let p = ProblemParams::new(6, 6, 5, 2, 2).unwrap();
//! assert_eq!(achievable_cost(&p).unwrap(), Rate::new(10, 3));
//! ```
//!
//! Runnable examples live in `examples/`; try
//! `cargo run --example worked_instance` or `cargo run --example build_and_decode`.

pub mod assignment;
pub mod bounds;
pub mod cli;
pub mod gf;
pub mod params;
pub mod reference;
pub mod scheme;
pub mod sim;
pub mod util;

pub use assignment::{cyclic_assignment, Assignment};
pub use bounds::{optimality_report, CostReport, Rate, Verdict};
pub use gf::{Fe, FieldMatrix, LinalgError, PrimeField};
pub use params::{ParamError, ProblemParams, Regime};
pub use scheme::{build_for_regime, build_scheme, BuildOptions, Scheme, SchemeError};
pub use sim::{run_experiment, SimReport, StragglerPolicy};
