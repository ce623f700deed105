//! Jacobi-preconditioned conjugate gradients with optional nullspace deflation.

use super::sparse::dot;
use crate::error::{Error, Result};

/// Symmetric linear operator on `R^n`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn diagonal(&self) -> Vec<f64>;
}

impl LinearOperator for nalgebra::DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let xv = nalgebra::DVectorView::from_slice(x, self.ncols());
        let mut yv = nalgebra::DVectorViewMut::from_slice(y, self.nrows());
        yv.gemv(1.0, self, &xv, 0.0);
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self[(i, i)]).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual target `‖b − Ax‖ ≤ tol‖b‖`.
    pub tol: f64,
    /// Iteration cap; `None` selects [`default_max_iter`].
    pub max_iter: Option<usize>,
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: None,
            jacobi: true,
        }
    }
}

/// `50·√n`, capped at 200 000.
pub fn default_max_iter(n: usize) -> usize {
    ((50.0 * (n as f64).sqrt()).ceil() as usize).clamp(1, 200_000)
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual of the CG recurrence.
    pub residual: f64,
}

/// In-place projection applied to CG vectors.
pub type Projector<'a> = &'a dyn Fn(&mut [f64]);

/// Solves `A x = b` from a zero initial guess.
///
/// With a projector (an orthogonal projection onto the complement of the
/// nullspace of a semidefinite `A`), the right-hand side, the preconditioned
/// residuals and the final iterate are projected, so iterates stay in the
/// range of `A`.
pub fn cg_solve(
    op: &impl LinearOperator,
    b: &[f64],
    opts: &CgOptions,
    projector: Option<Projector<'_>>,
) -> Result<CgSolution> {
    cg_solve_from(op, b, vec![0.0; b.len()], opts, projector)
}

pub fn cg_solve_from(
    op: &impl LinearOperator,
    b: &[f64],
    x0: Vec<f64>,
    opts: &CgOptions,
    projector: Option<Projector<'_>>,
) -> Result<CgSolution> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x0.len(),
        });
    }
    let project = |v: &mut [f64]| {
        if let Some(p) = projector {
            p(v)
        }
    };
    let max_iter = opts.max_iter.unwrap_or_else(|| default_max_iter(n));

    let mut b = b.to_vec();
    project(&mut b);
    let b_norm = dot(&b, &b).sqrt();
    let mut x = x0;
    project(&mut x);
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }

    let inv_diag: Vec<f64> = if opts.jacobi {
        op.diagonal()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect()
    } else {
        vec![1.0; n]
    };

    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(&b) {
        *ri = bi - *ri;
    }
    project(&mut r);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut residual = dot(&r, &r).sqrt() / b_norm;

    let mut iterations = 0;
    while residual > opts.tol {
        if iterations >= max_iter {
            return Err(Error::CgNotConverged {
                iterations,
                residual,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::CgNotConverged {
                iterations,
                residual,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        residual = dot(&r, &r).sqrt() / b_norm;
        if residual <= opts.tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    project(&mut x);
    Ok(CgSolution {
        x,
        iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_in_one_iteration() {
        let a = DMatrix::<f64>::identity(5, 5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        let sol = cg_solve(&a, &b, &CgOptions::default(), None).unwrap();
        assert_eq!(sol.iterations, 1);
        for (x, y) in sol.x.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 8.0]);
        let sol = cg_solve(
            &a,
            &[2.0, 8.0],
            &CgOptions {
                jacobi: false,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14 && (sol.x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_spd_matches_dense_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 50;
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let oracle = a
            .clone()
            .cholesky()
            .unwrap()
            .solve(&DVector::from_column_slice(&b));
        let sol = cg_solve(
            &a,
            &b,
            &CgOptions {
                tol: 1e-14,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        for i in 0..n {
            assert!(
                (sol.x[i] - oracle[i]).abs() < 1e-9,
                "{} vs {}",
                sol.x[i],
                oracle[i]
            );
        }
    }

    #[test]
    fn reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(n, n) * 1e-3;
        let b = vec![1.0; n];
        let err = cg_solve(
            &a,
            &b,
            &CgOptions {
                tol: 1e-14,
                max_iter: Some(3),
                jacobi: true,
            },
            None,
        )
        .unwrap_err();
        match err {
            Error::CgNotConverged {
                iterations,
                residual,
            } => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deflated_singular_system() {
        // 1D periodic Laplacian, nullspace = constants
        let n = 16;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 2.0;
            a[(i, (i + 1) % n)] = -1.0;
            a[(i, (i + n - 1) % n)] = -1.0;
        }
        let mut b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mean = b.iter().sum::<f64>() / n as f64;
        b.iter_mut().for_each(|v| *v -= mean);
        let proj = |v: &mut [f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= m);
        };
        let sol = cg_solve(&a, &b, &CgOptions::default(), Some(&proj)).unwrap();
        assert!(sol.x.iter().sum::<f64>().abs() < 1e-12);
        let mut ax = vec![0.0; n];
        a.apply(&sol.x, &mut ax);
        let err: f64 = ax
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10);
    }
}
