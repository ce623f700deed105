//! Repeated solves with one fixed SPD matrix.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::cg::{cg_solve, cg_solve_from, CgOptions};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Owns a matrix and the CG settings used for every solve with it.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    matrix: CsrMatrix,
    cg: CgOptions,
}

impl SpdSolver {
    pub fn new(matrix: CsrMatrix, cg: CgOptions) -> Self {
        Self { matrix, cg }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(cg_solve(&self.matrix, b, &self.cg, None)?.x)
    }

    /// Solve starting from `x0`.
    pub fn solve_from(&self, b: &[f64], x0: Vec<f64>) -> Result<Vec<f64>> {
        Ok(cg_solve_from(&self.matrix, b, x0, &self.cg, None)?.x)
    }

    /// Solves for every column of `b`, columns in parallel.
    pub fn solve_columns(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: b.nrows(),
            });
        }
        let cols: Vec<Vec<f64>> = (0..b.ncols())
            .into_par_iter()
            .map(|j| self.solve(b.column(j).as_slice()))
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(n, b.ncols(), |i, j| cols[j][i]))
    }
}
