use std::fmt;
use std::ops::Range;

use rand::Rng;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use super::{Fe, LinalgError, PrimeField};

/// Dense row-major matrix over a prime field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<Fe>,
}

impl FieldMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        FieldMatrix {
            field,
            rows,
            cols,
            data: vec![Fe::ZERO; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_fn(
        field: PrimeField,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Fe,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        FieldMatrix {
            field,
            rows,
            cols,
            data,
        }
    }

    /// Builds a matrix from rows of field elements; rows must share a length.
    pub fn from_rows(field: PrimeField, rows: Vec<Vec<Fe>>) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(LinalgError::ShapeError {
                op: "from_rows",
                left: (rows.len(), cols),
                right: (1, bad.len()),
            });
        }
        let n = rows.len();
        Ok(FieldMatrix {
            field,
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Builds a matrix from signed integer rows, reducing each entry mod q.
    pub fn from_i64_rows(field: PrimeField, rows: &[&[i64]]) -> Result<Self, LinalgError> {
        Self::from_rows(
            field,
            rows.iter()
                .map(|r| r.iter().map(|&x| field.from_i64(x)).collect())
                .collect(),
        )
    }

    /// Uniform i.i.d. entries.
    pub fn random<R: Rng + ?Sized>(
        field: PrimeField,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Self {
        Self::from_fn(field, rows, cols, |_, _| field.random(rng))
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Fe {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r},{c}) out of {:?}",
            self.shape()
        );
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Fe) {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r},{c}) out of {:?}",
            self.shape()
        );
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Fe] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Fe] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[Fe]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    fn check_field(&self, other: &FieldMatrix) -> Result<(), LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch(
                self.field.modulus(),
                other.field.modulus(),
            ));
        }
        Ok(())
    }

    pub fn mul(&self, other: &FieldMatrix) -> Result<FieldMatrix, LinalgError> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(LinalgError::ShapeError {
                op: "mat_mul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let f = self.field;
        let mut out = FieldMatrix::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for (k, &a) in self.row(r).iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let brow = other.row(k);
                let orow = out.row_mut(r);
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o = f.mul_add(*o, a, b);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[Fe]) -> Result<Vec<Fe>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::ShapeError {
                op: "mul_vec",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        let f = self.field;
        Ok(self
            .iter_rows()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(f.zero(), |acc, (&a, &b)| f.mul_add(acc, a, b))
            })
            .collect())
    }

    pub fn transpose(&self) -> FieldMatrix {
        FieldMatrix::from_fn(self.field, self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn select_rows(&self, idx: &[usize]) -> FieldMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        FieldMatrix {
            field: self.field,
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> FieldMatrix {
        FieldMatrix::from_fn(self.field, self.rows, idx.len(), |r, c| self.get(r, idx[c]))
    }

    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> FieldMatrix {
        let (r0, c0) = (rows.start, cols.start);
        FieldMatrix::from_fn(self.field, rows.len(), cols.len(), |r, c| {
            self.get(r0 + r, c0 + c)
        })
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &FieldMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for r in 0..block.rows {
            let dst = (r0 + r) * self.cols + c0;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(r));
        }
    }

    /// Stacks matrices with equal column counts top to bottom.
    pub fn vstack(parts: &[&FieldMatrix]) -> Result<FieldMatrix, LinalgError> {
        let first = parts.first().ok_or(LinalgError::ShapeError {
            op: "vstack",
            left: (0, 0),
            right: (0, 0),
        })?;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            first.check_field(p)?;
            if p.cols != first.cols {
                return Err(LinalgError::ShapeError {
                    op: "vstack",
                    left: first.shape(),
                    right: p.shape(),
                });
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(FieldMatrix {
            field: first.field,
            rows,
            cols: first.cols,
            data,
        })
    }

    /// Eliminates on the first `pivot_cols` columns, in place. With
    /// `reduced`, clears above pivots as well and normalizes them to one.
    /// Returns the pivot column of each pivot row, in order.
    fn eliminate(&mut self, pivot_cols: usize, reduced: bool) -> Vec<usize> {
        let f = self.field;
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut pr = 0;
        for c in 0..pivot_cols {
            if pr == self.rows {
                break;
            }
            let Some(p) = (pr..self.rows).find(|&r| !self.get(r, c).is_zero()) else {
                continue;
            };
            if p != pr {
                for k in 0..cols {
                    self.data.swap(p * cols + k, pr * cols + k);
                }
            }
            let inv = f.inv(self.get(pr, c)).expect("pivot is nonzero");
            if reduced {
                for x in self.row_mut(pr) {
                    *x = f.mul(*x, inv);
                }
            }
            let pivot_row = self.row(pr).to_vec();
            let scale = if reduced { f.one() } else { inv };
            let first = if reduced { 0 } else { pr + 1 };
            for r in first..self.rows {
                let lead = self.get(r, c);
                if r == pr || lead.is_zero() {
                    continue;
                }
                let factor = f.neg(f.mul(lead, scale));
                for (x, &y) in self.row_mut(r).iter_mut().zip(&pivot_row).skip(c) {
                    *x = f.mul_add(*x, factor, y);
                }
            }
            pivots.push(c);
            pr += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.eliminate(self.cols, false).len()
    }

    /// Solves `self * x = c` for a square invertible `self`.
    pub fn solve(&self, c: &[Fe]) -> Result<Vec<Fe>, LinalgError> {
        if !self.is_square() || c.len() != self.rows {
            return Err(LinalgError::ShapeError {
                op: "solve_linear",
                left: self.shape(),
                right: (c.len(), 1),
            });
        }
        let n = self.rows;
        let mut aug = FieldMatrix::from_fn(self.field, n, n + 1, |r, k| {
            if k < n {
                self.get(r, k)
            } else {
                c[r]
            }
        });
        if aug.eliminate(n, true).len() < n {
            return Err(LinalgError::SingularSystem);
        }
        Ok((0..n).map(|r| aug.get(r, n)).collect())
    }

    pub fn inverse(&self) -> Result<FieldMatrix, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::ShapeError {
                op: "invert",
                left: self.shape(),
                right: self.shape(),
            });
        }
        let n = self.rows;
        let f = self.field;
        let mut aug = FieldMatrix::from_fn(f, n, 2 * n, |r, k| {
            if k < n {
                self.get(r, k)
            } else if k - n == r {
                f.one()
            } else {
                f.zero()
            }
        });
        if aug.eliminate(n, true).len() < n {
            return Err(LinalgError::SingularSystem);
        }
        Ok(aug.submatrix(0..n, n..2 * n))
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "FieldMatrix {}x{} over F_{}",
            self.rows,
            self.cols,
            self.field.modulus()
        )?;
        for row in self.iter_rows() {
            let cells: Vec<String> = row.iter().map(|x| self.field.display(*x)).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Serialized as a list of rows of decimal strings (residues in `[0, q)`).
impl Serialize for FieldMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for row in self.iter_rows() {
            let cells: Vec<String> = row.iter().map(|x| x.value().to_string()).collect();
            seq.serialize_element(&cells)?;
        }
        seq.end()
    }
}
