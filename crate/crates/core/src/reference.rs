//! A fully worked instance at `(K, N, Nr, Kc, m) = (6, 6, 5, 2, 2)`.
//!
//! Here `u = 2`, `m + u - 1 = 3` groups, stripe width 2 and `v = 4`
//! virtual rows. The data below pins down every random choice of the
//! construction (demand, last block of `S`, free values) together with the
//! resulting `S` and virtual rows of `F'`, all as small rationals mapped
//! into the field.

use crate::gf::{Fe, FieldMatrix, PrimeField};
use crate::params::ProblemParams;
use crate::util::mod1;

const DEMAND: [[&str; 6]; 2] = [
    ["1", "1", "1", "1", "1", "1"],
    ["0", "1", "2", "3", "4", "5"],
];

/// `S`, row `(n-1)2 + (j-1)`; columns 0..6 are the three group blocks,
/// columns 6..10 the striped last block.
const TRANSMISSION: [[&str; 10]; 12] = [
    ["0", "5/2", "0", "0", "0", "-11/4", "0", "2", "0", "0"],
    ["1", "-14", "1", "27", "0", "0", "0", "0", "2", "0"],
    ["3/4", "1", "0", "0", "41/8", "1", "2", "2", "0", "0"],
    ["40", "0", "-82", "1", "0", "0", "0", "0", "0", "2"],
    ["1", "13/8", "0", "0", "1", "-9/16", "1", "2", "0", "0"],
    ["1", "-10", "0", "39/2", "0", "0", "0", "0", "2", "1"],
    ["5/8", "1", "0", "0", "-25/16", "0", "0", "1", "0", "0"],
    ["-19/2", "0", "41/2", "1", "0", "0", "0", "0", "1", "0"],
    ["0", "-5/8", "0", "0", "1", "41/16", "1", "0", "0", "0"],
    ["1", "-10", "1", "37/2", "0", "0", "0", "0", "2", "1"],
    ["3/4", "1", "0", "0", "73/8", "0", "2", "2", "0", "0"],
    ["-23/2", "1", "31/2", "0", "0", "0", "0", "0", "1", "1"],
];

/// Virtual rows of `F'` over the three group blocks (18 columns).
/// Entries 16 and 17 of the first row are negative; a sign-flipped
/// transcription of them breaks the zero constraints of worker 3.
const VIRTUAL: [[&str; 18]; 4] = [
    [
        "1/4", "5/8", "5/4", "15/8", "21/8", "27/8", "0", "0", "0", "0", "0", "0", "-33/8",
        "-57/16", "-49/8", "-139/16", "-161/16", "-191/16",
    ],
    [
        "-5/8", "-13/8", "-21/8", "-15/4", "-5", "-25/4", "0", "0", "0", "0", "0", "0", "25/16",
        "25/16", "25/16", "33/8", "11/2", "55/8",
    ],
    [
        "19/2", "19/2", "19/2", "41/2", "55/2", "69/2", "-41/2", "-43/2", "-45/2", "-41", "-109/2",
        "-68", "0", "0", "0", "0", "0", "0",
    ],
    [
        "-20", "-10", "0", "-12", "-20", "-20", "41", "47/2", "7", "51/2", "39", "77/2", "0", "0",
        "0", "0", "0", "0",
    ],
];

/// Parses `"a"` or `"a/b"` into the field.
pub fn parse_fraction(field: PrimeField, s: &str) -> Fe {
    let (num, den) = s.split_once('/').unwrap_or((s, "1"));
    let num: i64 = num.trim().parse().expect("integer numerator");
    let den: i64 = den.trim().parse().expect("integer denominator");
    field.ratio(num, den).expect("nonzero denominator")
}

fn matrix<const C: usize>(field: PrimeField, rows: &[[&str; C]]) -> FieldMatrix {
    FieldMatrix::from_fn(field, rows.len(), C, |r, c| {
        parse_fraction(field, rows[r][c])
    })
}

pub fn params() -> ProblemParams {
    ProblemParams::new(6, 6, 5, 2, 2).expect("valid parameters")
}

/// The demand: all-ones and `0..6`.
pub fn demand(field: PrimeField) -> FieldMatrix {
    matrix(field, &DEMAND)
}

/// The full `12 x 10` transmission matrix.
pub fn transmission(field: PrimeField) -> FieldMatrix {
    matrix(field, &TRANSMISSION)
}

/// The `12 x 4` last block of `S`.
pub fn last_block(field: PrimeField) -> FieldMatrix {
    transmission(field).submatrix(0..12, 6..10)
}

/// The `4 x 18` virtual rows of `F'`.
pub fn virtual_rows(field: PrimeField) -> FieldMatrix {
    matrix(field, &VIRTUAL)
}

/// The free values of the `(t, j)` system, ordered by worker: entry
/// `Mod(n, 2)` of block `t` in `s^{n,j}`.
pub fn free_values(field: PrimeField, t: usize, j: usize) -> Vec<Fe> {
    let s = transmission(field);
    (1..=6)
        .map(|n| s.get((n - 1) * 2 + j - 1, (t - 1) * 2 + mod1(n as i64, 2) - 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_parse() {
        let f = PrimeField::new(7).unwrap();
        assert_eq!(parse_fraction(f, "-1/2"), f.elem(3));
        assert_eq!(parse_fraction(f, "5"), f.elem(5));
    }

    #[test]
    fn free_values_of_the_first_block() {
        let f = params().field();
        let want: Vec<Fe> = [0, 1, 1, 1, 0, 1].iter().map(|&x| f.elem(x)).collect();
        assert_eq!(free_values(f, 1, 1), want);
    }
}
