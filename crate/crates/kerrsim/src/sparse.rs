//! Complex sparse matrices in CSR form.
//!
//! Operators on the Fock basis (ladder operators, Hamiltonian terms) and the
//! assembled Liouvillian are all [`SparseOperator`]s. Construction goes
//! through sorted triplet merge so that identical input triplets always yield
//! an identical matrix, independent of assembly order.

use crate::{Complex64, Error, Result};
use faer::Mat;

type C = Complex64;

/// Entries below this magnitude are dropped during triplet merge.
const MERGE_DROP_TOL: f64 = 0.0;

/// Square or rectangular complex sparse matrix, compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C>,
}

impl SparseOperator {
    /// Build from (row, col, value) triplets; duplicates are summed,
    /// exact zeros dropped. Deterministic for any input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: Vec<(usize, usize, C)>,
    ) -> Result<Self> {
        let mut t = triplets;
        for &(r, c, _) in &t {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfRange(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
        }
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<C> = Vec::with_capacity(t.len());
        let mut i = 0;
        while i < t.len() {
            let (r, c, _) = t[i];
            let mut v = C::new(0.0, 0.0);
            while i < t.len() && t[i].0 == r && t[i].1 == c {
                v += t[i].2;
                i += 1;
            }
            if v.norm_sqr() > MERGE_DROP_TOL {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: vec![], values: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![C::new(1.0, 0.0); n],
        }
    }

    /// Diagonal matrix from the given entries.
    pub fn diagonal(diag: &[C]) -> Self {
        let n = diag.len();
        let mut triplets = Vec::with_capacity(n);
        for (i, &v) in diag.iter().enumerate() {
            if v != C::new(0.0, 0.0) {
                triplets.push((i, i, v));
            }
        }
        Self::from_triplets(n, n, triplets).expect("diagonal triplets are in range")
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

    /// Iterate over stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => C::new(0.0, 0.0),
        }
    }

    pub fn diag(&self) -> Vec<C> {
        let n = self.nrows.min(self.ncols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    /// y = A x.
    pub fn matvec(&self, x: &[C], y: &mut [C]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = C::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, triplets).expect("adjoint in range")
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, triplets).expect("transpose in range")
    }

    pub fn conjugate(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| (r, c, v.conj())).collect();
        Self::from_triplets(self.nrows, self.ncols, triplets).expect("conjugate in range")
    }

    pub fn scale(&self, s: C) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "add {}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut triplets: Vec<_> = self.iter().collect();
        triplets.extend(other.iter());
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    /// Sparse-sparse product A B.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut triplets = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let j = self.col_idx[k];
                let a = self.values[k];
                for kk in other.row_ptr[j]..other.row_ptr[j + 1] {
                    triplets.push((r, other.col_idx[kk], a * other.values[kk]));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, triplets)
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &Self) -> Self {
        let nr = self.nrows * other.nrows;
        let nc = self.ncols * other.ncols;
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.iter() {
            for (r2, c2, v2) in other.iter() {
                triplets.push((r1 * other.nrows + r2, c1 * other.ncols + c2, v1 * v2));
            }
        }
        Self::from_triplets(nr, nc, triplets).expect("kron in range")
    }

    /// Y = A X with dense X (column-major via faer).
    pub fn mul_dense(&self, x: &Mat<C>) -> Mat<C> {
        assert_eq!(x.nrows(), self.ncols);
        let mut y = Mat::<C>::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            for r in 0..self.nrows {
                let mut acc = C::new(0.0, 0.0);
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * x[(self.col_idx[k], c)];
                }
                y[(r, c)] = acc;
            }
        }
        y
    }

    /// Y = X A with dense X.
    pub fn dense_mul(&self, x: &Mat<C>) -> Mat<C> {
        assert_eq!(x.ncols(), self.nrows);
        let mut y = Mat::<C>::zeros(x.nrows(), self.ncols);
        for j in 0..self.nrows {
            for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                let c = self.col_idx[k];
                let v = self.values[k];
                for r in 0..x.nrows() {
                    y[(r, c)] += x[(r, j)] * v;
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> Mat<C> {
        let mut m = Mat::<C>::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entry magnitude (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
