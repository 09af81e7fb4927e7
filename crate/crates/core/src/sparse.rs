//! Compressed sparse row matrices built from scattered triplets, and a
//! sparse LU wrapper.

use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::error::{Error, Result};

/// Unordered `(row, col, value)` entries; duplicates are summed on
/// compression.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts by position and sums duplicates. The summation order follows
    /// insertion order, so the result is deterministic.
    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `y^T A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        assert_eq!(y.len(), self.nrows);
        (0..self.nrows).map(|i| y[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (i, j, v) in self.triplets() {
            b.push(j, i, v);
        }
        b.build()
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for (i, j, v) in self.triplets() {
            t.push(i, j, a * v);
        }
        for (i, j, v) in other.triplets() {
            t.push(i, j, b * v);
        }
        t.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.lin_comb(1.0, &t, -1.0).max_abs()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] += v;
        }
        d
    }

    /// Coordinate text format: a `rows cols nnz` header, then one
    /// `row col value` line per stored entry (0-based).
    pub fn to_coo_text(&self) -> String {
        let mut s = String::with_capacity(32 * (self.nnz() + 1));
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {v:.17e}");
        }
        s
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<Triplet<usize, usize, f64>> = self.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::Solver(format!("cannot convert matrix: {e:?}")))
    }
}

/// Sparse LU factorization of a square matrix, reused across solves.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Solver(format!("matrix is {}x{}, not square", a.nrows(), a.ncols())));
        }
        let lu = a
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?;
        Ok(SparseLu { n: a.nrows(), lu })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n);
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Solver("singular matrix: solution is not finite".into()))
        }
    }
}

/// Factorizes and solves in one go.
pub fn solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SparseLu::new(a)?.solve(b)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> CsrMatrix {
        let mut b = TripletBuilder::new(3, 3);
        for &(i, j, v) in &[(0, 0, 4.0), (1, 1, 3.0), (2, 2, 5.0), (0, 2, 1.0), (2, 0, -1.0), (1, 0, 0.5), (0, 0, 1.0)] {
            b.push(i, j, v);
        }
        b.build()
    }

    #[test]
    fn duplicates_are_summed() {
        let a = sample();
        assert_eq!(a.get(0, 0), 5.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 6);
    }

    #[test]
    fn lu_matches_dense_solve() {
        let a = sample();
        let b = [1.0, 2.0, 3.0];
        let x = solve(&a, &b).unwrap();
        let xd = a.to_dense().lu().solve(&nalgebra::DVector::from_row_slice(&b)).unwrap();
        for i in 0..3 {
            assert!((x[i] - xd[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 0, 1.0);
        b.push(0, 1, 1.0);
        b.push(1, 0, 1.0);
        b.push(1, 1, 1.0);
        let r = SparseLu::new(&b.build()).and_then(|lu| lu.solve(&[1.0, 0.0]));
        assert!(r.is_err());
    }

    #[test]
    fn coo_export_lists_every_entry() {
        let text = sample().to_coo_text();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("3 3 6"));
        assert_eq!(lines.count(), 6);
    }

    proptest! {
        #[test]
        fn matvec_and_transpose_agree_with_dense(
            entries in proptest::collection::vec((0usize..5, 0usize..4, -10.0f64..10.0), 0..30),
            x in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            let mut b = TripletBuilder::new(5, 4);
            for &(i, j, v) in &entries {
                b.push(i, j, v);
            }
            let a = b.build();
            let d = a.to_dense();
            let y = a.mul_vec(&x);
            let yd = &d * nalgebra::DVector::from_row_slice(&x);
            for i in 0..5 {
                prop_assert!((y[i] - yd[i]).abs() < 1e-12);
            }
            prop_assert_eq!(a.transpose().to_dense(), d.transpose());
        }
    }
}
