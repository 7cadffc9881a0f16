//! Compressed sparse row storage.
//!
//! Finite-element matrices on one mesh (mass, stiffness and every
//! pseudo-mass matrix) share the same sparsity pattern, so the pattern is
//! reference counted and matrices on it only own their value arrays.

use std::sync::Arc;

use crate::error::{check_len, Error, Result};

/// Row offsets and sorted column indices of a CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrPattern {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl CsrPattern {
    /// Builds a pattern from per-row column lists. Columns are sorted and
    /// deduplicated.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.last().map_or(true, |&c| c < ncols));
            col_idx.extend_from_slice(&cols);
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Position of entry `(i, j)` in the value array, if structurally present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// `y = sum_k coef_k * A_k x` for value arrays `A_k` living on this
    /// pattern, in a single pass over the structure.
    pub fn combo_matvec(&self, terms: &[(f64, &[f64])], x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for nz in self.row_ptr[i]..self.row_ptr[i + 1] {
                let mut v = 0.0;
                for &(c, vals) in terms {
                    v += c * vals[nz];
                }
                acc += v * x[self.col_idx[nz]];
            }
            *yi = acc;
        }
    }

    /// Same as [`combo_matvec`](Self::combo_matvec) but accumulates into `y`.
    pub fn combo_matvec_add(&self, terms: &[(f64, &[f64])], x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for nz in self.row_ptr[i]..self.row_ptr[i + 1] {
                let mut v = 0.0;
                for &(c, vals) in terms {
                    v += c * vals[nz];
                }
                acc += v * x[self.col_idx[nz]];
            }
            *yi += acc;
        }
    }
}

/// A CSR matrix: shared pattern plus owned values.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pattern: Arc<CsrPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(pattern: Arc<CsrPattern>, values: Vec<f64>) -> Result<Self> {
        check_len(pattern.nnz(), values.len(), "csr values")?;
        Ok(Self { pattern, values })
    }

    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); nrows];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let pattern = Arc::new(CsrPattern::from_rows(ncols, rows));
        let mut m = Self::zeros(pattern);
        for &(i, j, v) in triplets {
            let k = m.pattern.find(i, j).expect("entry in pattern");
            m.values[k] += v;
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let trip: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &trip)
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols());
        debug_assert_eq!(y.len(), self.nrows());
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for nz in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[nz] * x[p.col_idx[nz]];
            }
            *yi = acc;
        }
    }

    /// `y += alpha * A x`.
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for nz in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[nz] * x[p.col_idx[nz]];
            }
            *yi += alpha * acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.matvec(x, &mut y);
        y
    }

    /// `sum_k c_k A_k` over matrices sharing one pattern.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Result<CsrMatrix> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let pattern = first.1.pattern.clone();
        let mut values = vec![0.0; pattern.nnz()];
        for (c, m) in terms {
            if !Arc::ptr_eq(&m.pattern, &pattern) && *m.pattern != *pattern {
                return Err(Error::InvalidArgument(
                    "linear combination of matrices with different patterns".into(),
                ));
            }
            for (v, mv) in values.iter_mut().zip(&m.values) {
                *v += c * mv;
            }
        }
        Ok(CsrMatrix { pattern, values })
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        CsrMatrix {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let p = &*self.pattern;
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..p.nrows {
            for nz in p.row_ptr[i]..p.row_ptr[i + 1] {
                trip.push((p.col_idx[nz], i, self.values[nz]));
            }
        }
        CsrMatrix::from_triplets(p.ncols, p.nrows, &trip)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        check_len(self.ncols(), other.nrows(), "sparse product inner dimension")?;
        let a = &*self.pattern;
        let b = &*other.pattern;
        let ncols = b.ncols;
        let mut marker = vec![usize::MAX; ncols];
        let mut acc = vec![0.0; ncols];
        let mut rows = Vec::with_capacity(a.nrows);
        let mut vals_per_row = Vec::with_capacity(a.nrows);
        for i in 0..a.nrows {
            let mut cols = Vec::new();
            for ka in a.row_ptr[i]..a.row_ptr[i + 1] {
                let k = a.col_idx[ka];
                let av = self.values[ka];
                for kb in b.row_ptr[k]..b.row_ptr[k + 1] {
                    let j = b.col_idx[kb];
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += av * other.values[kb];
                }
            }
            cols.sort_unstable();
            vals_per_row.push(cols.iter().map(|&j| acc[j]).collect::<Vec<_>>());
            rows.push(cols);
        }
        let pattern = Arc::new(CsrPattern::from_rows(ncols, rows));
        let values = vals_per_row.into_iter().flatten().collect();
        Ok(CsrMatrix { pattern, values })
    }

    /// Row-major dense copy; intended for small test instances.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols()]; self.nrows()];
        let p = &*self.pattern;
        for (i, row) in d.iter_mut().enumerate() {
            for nz in p.row_ptr[i]..p.row_ptr[i + 1] {
                row[p.col_idx[nz]] += self.values[nz];
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let p = &*self.pattern;
        let mut worst = 0.0_f64;
        for i in 0..p.nrows {
            for nz in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[nz];
                worst = worst.max((self.values[nz] - self.get(j, i)).abs());
            }
        }
        worst
    }
}
