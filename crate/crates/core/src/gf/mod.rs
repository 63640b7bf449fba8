//! Exact arithmetic and dense linear algebra over a prime field `F_q`.
//!
//! Everything downstream (demand matrices, transmission matrices, decoding)
//! runs on [`FieldMatrix`]. Elimination pivots on the first nonzero entry of
//! each column, so results are a deterministic function of the input.

mod field;
mod matrix;

pub use field::{is_prime, Fe, PrimeField, DEFAULT_MODULUS, MAX_MODULUS};
pub use matrix::FieldMatrix;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("division by zero in F_q")]
    DivisionByZero,
    #[error("shape mismatch: {op} got {left:?} and {right:?}")]
    ShapeError {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("singular system")]
    SingularSystem,
    #[error("operands live in different fields (q = {0} vs q = {1})")]
    FieldMismatch(u64, u64),
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is too large (must be below 2^63)")]
    ModulusTooLarge(u64),
}

/// `A * B`.
pub fn mat_mul(a: &FieldMatrix, b: &FieldMatrix) -> Result<FieldMatrix, LinalgError> {
    a.mul(b)
}

/// Row-echelon rank of `a`.
pub fn rank(a: &FieldMatrix) -> usize {
    a.rank()
}

/// Solves `A x = c` for square invertible `A`.
pub fn solve_linear(a: &FieldMatrix, c: &[Fe]) -> Result<Vec<Fe>, LinalgError> {
    a.solve(c)
}

/// `A^{-1}` for square invertible `A`.
pub fn invert(a: &FieldMatrix) -> Result<FieldMatrix, LinalgError> {
    a.inverse()
}
