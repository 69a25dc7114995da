//! Square CSR sparse matrices used for adjacency and propagation operators.
//!
//! Stored entries are always finite and nonzero, with each row sorted by
//! column and free of duplicates; `nnz` therefore counts genuine nonzeros.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dense::DenseMatrix;

/// Errors from sparse construction and arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub enum SparseError {
    /// Operands have different orders.
    DimMismatch {
        /// Order of the left operand.
        left: usize,
        /// Order of the right operand.
        right: usize,
    },
    /// An entry was NaN or infinite.
    NonFinite {
        /// Row of the offending entry.
        row: usize,
        /// Column of the offending entry.
        col: usize,
    },
    /// An index fell outside the declared order.
    IndexOutOfRange {
        /// Offending row index.
        row: usize,
        /// Offending column index.
        col: usize,
        /// Declared matrix order.
        dim: usize,
    },
    /// An operation requiring nonnegative entries saw a negative one.
    NegativeEntry {
        /// Row of the offending entry.
        row: usize,
        /// Column of the offending entry.
        col: usize,
        /// The negative value.
        value: f64,
    },
}

impl fmt::Display for SparseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparseError::DimMismatch { left, right } => {
                write!(f, "matrix order mismatch: {left} vs {right}")
            }
            SparseError::NonFinite { row, col } => {
                write!(f, "non-finite entry at ({row}, {col})")
            }
            SparseError::IndexOutOfRange { row, col, dim } => {
                write!(f, "entry ({row}, {col}) outside order-{dim} matrix")
            }
            SparseError::NegativeEntry { row, col, value } => {
                write!(f, "negative entry {value} at ({row}, {col})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SparseError {}

/// Square sparse matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Empty matrix of the given order.
    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    /// Identity matrix of the given order.
    pub fn identity(dim: usize) -> Self {
        let row_ptr = (0..=dim).collect();
        let col_idx = (0..dim).collect();
        Self { dim, row_ptr, col_idx, values: vec![1.0; dim] }
    }

    /// Builds from (row, col, value) triplets, summing duplicates.
    ///
    /// Triplets summing to exactly zero are dropped so that `nnz` keeps
    /// counting true nonzeros.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SparseError> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(SparseError::IndexOutOfRange { row: r, col: c, dim });
            }
            if !v.is_finite() {
                return Err(SparseError::NonFinite { row: r, col: c });
            }
            entries.push((r, c, v));
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut i = 0;
        while i < entries.len() {
            let (r, c, mut v) = entries[i];
            i += 1;
            while i < entries.len() && entries[i].0 == r && entries[i].1 == c {
                v += entries[i].2;
                i += 1;
            }
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { dim, row_ptr, col_idx, values })
    }

    /// Matrix order.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Entry at (r, c), zero if not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries as (row, col, value) in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Sum of the stored entries in row `r`.
    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).1.iter().sum()
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Self {
        let mut row_ptr = vec![0usize; self.dim + 1];
        for &c in &self.col_idx {
            row_ptr[c + 1] += 1;
        }
        for r in 0..self.dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut next = row_ptr.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (r, c, v) in self.entries() {
            let slot = next[c];
            col_idx[slot] = r;
            values[slot] = v;
            next[c] += 1;
        }
        Self { dim: self.dim, row_ptr, col_idx, values }
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &SparseMatrix, scale: f64) -> Result<Self, SparseError> {
        if self.dim != other.dim {
            return Err(SparseError::DimMismatch { left: self.dim, right: other.dim });
        }
        let triplets = self
            .entries()
            .chain(other.entries().map(|(r, c, v)| (r, c, scale * v)));
        Self::from_triplets(self.dim, triplets)
    }

    /// Symmetric part `(self + self^T) / 2`.
    pub fn symmetrized(&self) -> Self {
        let t = self.transpose();
        let triplets = self
            .entries()
            .map(|(r, c, v)| (r, c, 0.5 * v))
            .chain(t.entries().map(|(r, c, v)| (r, c, 0.5 * v)));
        Self::from_triplets(self.dim, triplets).expect("entries already validated")
    }

    /// True if `self` equals its transpose entrywise within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let t = self.transpose();
        if t.col_idx != self.col_idx || t.row_ptr != self.row_ptr {
            return false;
        }
        self.values
            .iter()
            .zip(&t.values)
            .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// `self * dense`, one output row per matrix row.
    ///
    /// # Panics
    /// Panics if `dense.rows() != self.dim()`.
    pub fn mul_dense(&self, dense: &DenseMatrix) -> DenseMatrix {
        assert_eq!(dense.rows(), self.dim, "operand row count mismatch");
        let mut out = DenseMatrix::zeros(self.dim, dense.cols());
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let out_row = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &d) in out_row.iter_mut().zip(dense.row(c)) {
                    *o += v * d;
                }
            }
        }
        out
    }

    /// `self^T * dense` without materializing the transpose.
    ///
    /// # Panics
    /// Panics if `dense.rows() != self.dim()`.
    pub fn transpose_mul_dense(&self, dense: &DenseMatrix) -> DenseMatrix {
        assert_eq!(dense.rows(), self.dim, "operand row count mismatch");
        let mut out = DenseMatrix::zeros(self.dim, dense.cols());
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let d_row = dense.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let out_row = out.row_mut(c);
                for (o, &d) in out_row.iter_mut().zip(d_row) {
                    *o += v * d;
                }
            }
        }
        out
    }

    /// Dense copy, mainly for small-scale checks.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            out.set(r, c, v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseMatrix {
        SparseMatrix::from_triplets(
            4,
            [
                (0, 1, 2.0),
                (0, 3, -1.0),
                (1, 0, 0.5),
                (2, 2, 3.0),
                (3, 0, 4.0),
                (3, 1, 1.5),
            ],
        )
        .unwrap()
    }

    #[test]
    fn from_triplets_sums_duplicates_and_drops_zero_sums() {
        let m = SparseMatrix::from_triplets(
            3,
            [(0, 1, 1.0), (0, 1, 2.0), (2, 0, 5.0), (2, 0, -5.0)],
        )
        .unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(2, 0), 0.0);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn from_triplets_rejects_bad_entries() {
        assert_eq!(
            SparseMatrix::from_triplets(2, [(0, 2, 1.0)]),
            Err(SparseError::IndexOutOfRange { row: 0, col: 2, dim: 2 })
        );
        assert_eq!(
            SparseMatrix::from_triplets(2, [(1, 1, f64::NAN)]),
            Err(SparseError::NonFinite { row: 1, col: 1 })
        );
    }

    #[test]
    fn transpose_agrees_with_dense_transpose() {
        let m = sample();
        assert_eq!(m.transpose().to_dense(), m.to_dense().transpose());
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn add_scaled_and_symmetrized_agree_with_dense_arithmetic() {
        let a = sample();
        let b = SparseMatrix::from_triplets(4, [(0, 1, 1.0), (2, 0, 2.0)]).unwrap();
        let mixed = a.add_scaled(&b, 0.25).unwrap();
        let mut expected = a.to_dense();
        expected.add_scaled(&b.to_dense(), 0.25);
        assert_eq!(mixed.to_dense(), expected);

        let sym = a.symmetrized();
        assert!(sym.is_symmetric(0.0));
        let mut dense_sym = a.to_dense();
        dense_sym.add_scaled(&a.to_dense().transpose(), 1.0);
        dense_sym.scale(0.5);
        assert_eq!(sym.to_dense(), dense_sym);
    }

    #[test]
    fn mul_dense_agrees_with_dense_product() {
        let m = sample();
        let d = DenseMatrix::from_rows(&[
            vec![1.0, 2.0],
            vec![0.0, -1.0],
            vec![3.0, 0.5],
            vec![-2.0, 1.0],
        ]);
        assert_eq!(m.mul_dense(&d), m.to_dense().matmul(&d));
        assert_eq!(m.transpose_mul_dense(&d), m.to_dense().transpose().matmul(&d));
    }

    #[test]
    fn mismatched_orders_are_rejected() {
        let a = SparseMatrix::zeros(3);
        let b = SparseMatrix::zeros(4);
        assert_eq!(
            a.add_scaled(&b, 1.0),
            Err(SparseError::DimMismatch { left: 3, right: 4 })
        );
    }
}
