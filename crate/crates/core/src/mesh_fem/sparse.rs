use rayon::prelude::*;

use super::cg::LinearOperator;
use crate::error::{Error, Result};

/// Square matrix in compressed sparse row format with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Allocates a zero matrix with the given per-row column sets.
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates
    /// in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); n];
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: r.max(c) + 1,
                });
            }
            rows[r].push(c);
        }
        let mut m = Self::from_pattern(rows);
        for &(r, c, v) in triplets {
            m.add(r, c, v);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    fn position(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.col_idx[start..self.row_ptr[r + 1]]
            .binary_search(&c)
            .ok()
            .map(|p| start + p)
    }

    /// Adds `v` to entry `(r, c)`, which must be part of the pattern.
    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let p = self.position(r, c).expect("entry outside sparsity pattern");
        self.values[p] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |K - Kᵀ|`, absolute.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// `y = K x`. Rows are computed independently, so the result does not
    /// depend on the worker count.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        const CHUNK: usize = 1024;
        y.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let base = chunk * CHUNK;
                for (k, yi) in out.iter_mut().enumerate() {
                    let r = base + k;
                    let mut s = 0.0;
                    for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                        s += self.values[p] * x[self.col_idx[p]];
                    }
                    *yi = s;
                }
            });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// `xᵀ K x`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul(x))
    }

    /// Principal submatrix on the given (sorted or unsorted) index set;
    /// row/column `k` of the result is `indices[k]` of `self`.
    pub fn principal_submatrix(&self, indices: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in indices.iter().enumerate() {
            map[i] = k;
        }
        let rows = indices
            .iter()
            .map(|&r| {
                self.row(r)
                    .0
                    .iter()
                    .filter(|&&c| map[c] != usize::MAX)
                    .map(|&c| map[c])
                    .collect()
            })
            .collect();
        let mut sub = Self::from_pattern(rows);
        for (k, &r) in indices.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if map[c] != usize::MAX {
                    sub.add(k, map[c], v);
                }
            }
        }
        sub
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                d[(r, c)] = v;
            }
        }
        d
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec(x, y)
    }

    fn diagonal(&self) -> Vec<f64> {
        CsrMatrix::diagonal(self)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
