//! Static condensation of the step problem onto the contact-tangential DOFs.
//!
//! The friction term only touches the contact DOFs `c`; for fixed `w_c` the
//! minimizer over the remaining DOFs `i` is `w_i = −K_ii⁻¹(r_i + Δt K_ic w_c)/Δt`.
//! Substituting leaves a dense problem in `w_c` with Hessian `Δt·S`,
//! `S = K_cc − K_ci K_ii⁻¹ K_ic`, whose minimizer is exactly the contact part
//! of the full-space minimizer.

use nalgebra::DMatrix;

use super::fista::{estimate_lipschitz, fista_minimize, FistaOptions, FistaOutcome};
use super::problem::{CompositeQuadratic, QuasistaticProblem};
use crate::error::{Error, Result};
use crate::mesh_fem::{CgOptions, SpdSolver};

/// Stored entries of `G = K_ii⁻¹ K_ic` above which `G` is not kept and every
/// step performs two interior solves instead.
pub const DENSE_COUPLING_LIMIT: usize = 50_000_000;

const SCHUR_BATCH: usize = 64;

#[derive(Debug)]
pub struct CondensedSystem {
    contact: Vec<usize>,
    interior: Vec<usize>,
    /// Column `k`: `(interior position, value)` of `K_ic`.
    coupling: Vec<Vec<(usize, f64)>>,
    solver: SpdSolver,
    schur: DMatrix<f64>,
    /// `K_ii⁻¹ K_ic` when small enough to store.
    g: Option<DMatrix<f64>>,
    /// `K_ii⁻¹ base_i` and `K_ii⁻¹ rate_i` (stored alongside `g`).
    base_response: Vec<f64>,
    rate_response: Vec<f64>,
    lipschitz: f64,
}

impl CondensedSystem {
    pub fn build(problem: &QuasistaticProblem, cg: CgOptions) -> Result<Self> {
        let n = problem.dim();
        let contact: Vec<usize> = problem.contact.iter().map(|c| c.dof).collect();
        let mut position = vec![usize::MAX; n];
        for (k, &c) in contact.iter().enumerate() {
            position[c] = k;
        }
        let interior: Vec<usize> = (0..n).filter(|&i| position[i] == usize::MAX).collect();
        let mut interior_pos = vec![usize::MAX; n];
        for (p, &i) in interior.iter().enumerate() {
            interior_pos[i] = p;
        }
        let nc = contact.len();
        let ni = interior.len();

        let k = &problem.stiffness;
        let mut k_cc = DMatrix::zeros(nc, nc);
        let mut coupling = vec![Vec::new(); nc];
        for (a, &c) in contact.iter().enumerate() {
            let (cols, vals) = k.row(c);
            for (&j, &v) in cols.iter().zip(vals) {
                if position[j] != usize::MAX {
                    k_cc[(a, position[j])] = v;
                } else {
                    coupling[a].push((interior_pos[j], v));
                }
            }
        }
        let solver = SpdSolver::new(k.principal_submatrix(&interior), cg);

        let coupling_block = |range: std::ops::Range<usize>| {
            let mut m = DMatrix::zeros(ni, range.len());
            for (col, a) in range.enumerate() {
                for &(p, v) in &coupling[a] {
                    m[(p, col)] = v;
                }
            }
            m
        };
        // S = K_cc − K_ciᵀ G, one batch of columns at a time
        let store_g = ni.saturating_mul(nc) <= DENSE_COUPLING_LIMIT;
        let mut schur = k_cc;
        let mut g_full = store_g.then(|| DMatrix::zeros(ni, nc));
        let mut start = 0;
        while start < nc {
            let end = (start + SCHUR_BATCH).min(nc);
            let g = solver.solve_columns(&coupling_block(start..end))?;
            for (col, b) in (start..end).enumerate() {
                for a in 0..nc {
                    let s: f64 = coupling[a].iter().map(|&(p, v)| v * g[(p, col)]).sum();
                    schur[(a, b)] -= s;
                }
            }
            if let Some(gf) = g_full.as_mut() {
                gf.columns_mut(start, end - start).copy_from(&g);
            }
            start = end;
        }
        let sym = 0.5 * (&schur + schur.transpose());
        let schur = sym;

        let restrict = |v: &[f64]| interior.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let (base_response, rate_response) = if store_g {
            (
                solver.solve(&restrict(&problem.load.base))?,
                solver.solve(&restrict(&problem.load.rate))?,
            )
        } else {
            (Vec::new(), Vec::new())
        };

        let dt = problem.time.dt();
        let lipschitz = if nc == 0 {
            1.0
        } else {
            let probe = CompositeQuadratic {
                hessian: &schur,
                scale: dt,
                linear: vec![0.0; nc],
                l1: vec![],
            };
            estimate_lipschitz(&probe)
        };

        Ok(Self {
            contact,
            interior,
            coupling,
            solver,
            schur,
            g: g_full,
            base_response,
            rate_response,
            lipschitz,
        })
    }

    pub fn num_contact(&self) -> usize {
        self.contact.len()
    }

    /// Dense Schur complement `S` on the contact DOFs.
    pub fn schur(&self) -> &DMatrix<f64> {
        &self.schur
    }

    pub fn stores_coupling(&self) -> bool {
        self.g.is_some()
    }

    pub fn interior_solver(&self) -> &SpdSolver {
        &self.solver
    }

    /// Step-size constant for the condensed objective at the problem's `Δt`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn coupling_apply(&self, w_c: &[f64], ni: usize) -> Vec<f64> {
        let mut out = vec![0.0; ni];
        for (a, col) in self.coupling.iter().enumerate() {
            if w_c[a] != 0.0 {
                for &(p, v) in col {
                    out[p] += v * w_c[a];
                }
            }
        }
        out
    }

    /// Minimizes the step objective at time `t`, warm-started from the
    /// contact velocities `warm` (length [`Self::num_contact`]). Returns the
    /// full reduced velocity and the optimizer outcome on the contact block.
    pub fn step(
        &self,
        problem: &QuasistaticProblem,
        u_prev: &[f64],
        t: f64,
        warm: &[f64],
        opts: &FistaOptions,
    ) -> Result<(Vec<f64>, FistaOutcome)> {
        let nc = self.contact.len();
        let ni = self.interior.len();
        if warm.len() != nc {
            return Err(Error::DimensionMismatch {
                expected: nc,
                actual: warm.len(),
            });
        }
        let dt = problem.time.dt();
        let r = problem.residual(u_prev, t);
        let r_i: Vec<f64> = self.interior.iter().map(|&i| r[i]).collect();

        // z = K_ii⁻¹ r_i
        let z = match &self.g {
            Some(g) => {
                let u_c: Vec<f64> = self.contact.iter().map(|&c| u_prev[c]).collect();
                let gu = g * nalgebra::DVector::from_column_slice(&u_c);
                (0..ni)
                    .map(|p| {
                        u_prev[self.interior[p]] + gu[p]
                            - self.base_response[p]
                            - t * self.rate_response[p]
                    })
                    .collect::<Vec<_>>()
            }
            None => self.solver.solve(&r_i)?,
        };
        let linear: Vec<f64> = (0..nc)
            .map(|a| {
                r[self.contact[a]] - self.coupling[a].iter().map(|&(p, v)| v * z[p]).sum::<f64>()
            })
            .collect();
        let objective = CompositeQuadratic {
            hessian: &self.schur,
            scale: dt,
            linear,
            l1: problem
                .contact
                .iter()
                .enumerate()
                .map(|(a, c)| (a, problem.friction_bound * c.weight))
                .collect(),
        };
        let opts = FistaOptions {
            lipschitz: Some(opts.lipschitz.unwrap_or(self.lipschitz)),
            ..*opts
        };
        let outcome = fista_minimize(&objective, warm, &opts)?;
        let w_c = &outcome.w;

        let w_i = match &self.g {
            Some(g) => {
                let gw = g * nalgebra::DVector::from_column_slice(w_c);
                (0..ni).map(|p| -z[p] / dt - gw[p]).collect::<Vec<_>>()
            }
            None => {
                let kw = self.coupling_apply(w_c, ni);
                let rhs: Vec<f64> = (0..ni).map(|p| r_i[p] + dt * kw[p]).collect();
                self.solver
                    .solve(&rhs)?
                    .into_iter()
                    .map(|v| -v / dt)
                    .collect()
            }
        };
        let mut w = vec![0.0; problem.dim()];
        for (p, &i) in self.interior.iter().enumerate() {
            w[i] = w_i[p];
        }
        for (a, &c) in self.contact.iter().enumerate() {
            w[c] = w_c[a];
        }
        Ok((w, outcome))
    }

    /// Contact entries of a reduced vector.
    pub fn contact_part(&self, v: &[f64]) -> Vec<f64> {
        self.contact.iter().map(|&c| v[c]).collect()
    }
}
