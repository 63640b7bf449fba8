//! Brute-force linear algebra over tiny prime fields, independent of the
//! elimination code under test.

#![allow(dead_code)]

use std::collections::HashSet;

use lsc::gf::{Fe, FieldMatrix, PrimeField};

/// Every vector of `F_q^len`, in lexicographic order.
pub fn all_vectors(field: PrimeField, len: usize) -> Vec<Vec<Fe>> {
    let q = field.modulus();
    let total = q.pow(len as u32);
    (0..total)
        .map(|mut idx| {
            (0..len)
                .map(|_| {
                    let d = idx % q;
                    idx /= q;
                    field.elem(d)
                })
                .collect()
        })
        .collect()
}

/// `q^rank` is the size of the row span, found by enumerating every
/// combination of rows.
pub fn brute_rank(m: &FieldMatrix) -> usize {
    let f = m.field();
    let span: HashSet<Vec<u64>> = all_vectors(f, m.rows())
        .into_iter()
        .map(|coeffs| {
            (0..m.cols())
                .map(|c| {
                    coeffs
                        .iter()
                        .enumerate()
                        .fold(f.zero(), |acc, (r, &x)| f.mul_add(acc, x, m.get(r, c)))
                        .value()
                })
                .collect()
        })
        .collect();
    let mut size = span.len() as u64;
    let mut rank = 0;
    while size > 1 {
        size /= f.modulus();
        rank += 1;
    }
    rank
}

/// All `x` with `m x = b`.
pub fn brute_solutions(m: &FieldMatrix, b: &[Fe]) -> Vec<Vec<Fe>> {
    all_vectors(m.field(), m.cols())
        .into_iter()
        .filter(|x| m.mul_vec(x).unwrap() == b)
        .collect()
}

/// The inverse, column by column, if every `m x = e_i` has exactly one
/// solution.
pub fn brute_inverse(m: &FieldMatrix) -> Option<FieldMatrix> {
    let f = m.field();
    let n = m.rows();
    let mut inv = FieldMatrix::zeros(f, n, n);
    for i in 0..n {
        let e: Vec<Fe> = (0..n)
            .map(|r| if r == i { f.one() } else { f.zero() })
            .collect();
        let sols = brute_solutions(m, &e);
        if sols.len() != 1 {
            return None;
        }
        for (r, &x) in sols[0].iter().enumerate() {
            inv.set(r, i, x);
        }
    }
    Some(inv)
}
