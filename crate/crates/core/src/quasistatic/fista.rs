//! Accelerated proximal gradient (FISTA) with function-value restart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::{CompositeQuadratic, FrictionProx};
use crate::error::{Error, Result};
use crate::mesh_fem::LinearOperator;

#[derive(Debug, Clone, Copy)]
pub struct FistaOptions {
    /// Stop when the composite gradient mapping norm drops below
    /// `tol · max(‖∇f(w_init)‖, ‖∇f(0)‖)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Restart the momentum and reject the step whenever `F` increases.
    pub restart: bool,
    /// Lipschitz constant of the smooth gradient; estimated when `None`.
    pub lipschitz: Option<f64>,
    pub record_history: bool,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
            restart: true,
            lipschitz: None,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FistaOutcome {
    pub w: Vec<f64>,
    pub iterations: usize,
    pub mapping_norm: f64,
    pub converged: bool,
    pub objective: f64,
    /// Step-size constant actually used (after any backtracking).
    pub lipschitz: f64,
    /// Objective at every accepted iterate, starting with `w_init`; later
    /// entries accumulate the exactly evaluated per-step changes.
    pub history: Vec<f64>,
}

/// Power iteration for `λ_max(s·H)`, run to 0.1 % agreement between
/// successive Rayleigh quotients and inflated by 10 %.
pub fn estimate_lipschitz<Op: LinearOperator>(objective: &CompositeQuadratic<'_, Op>) -> f64 {
    let n = objective.dim();
    if n == 0 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    normalize(&mut v);
    let mut hv = vec![0.0; n];
    let mut lambda = 0.0;
    for it in 0..2000 {
        objective.hessian_apply(&v, &mut hv);
        let rq: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
        let norm = hv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        v.iter_mut().zip(&hv).for_each(|(vi, hi)| *vi = hi / norm);
        let done = it >= 5 && (rq - lambda).abs() <= 1e-3 * rq;
        lambda = rq;
        if done {
            break;
        }
    }
    1.1 * lambda
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes a composite quadratic from `w_init`.
///
/// One Hessian product per iteration: products at the extrapolated point are
/// formed from those at the last two iterates. Hitting `max_iter` is not an
/// error; the outcome is returned with `converged = false`.
pub fn fista_minimize<Op: LinearOperator>(
    objective: &CompositeQuadratic<'_, Op>,
    w_init: &[f64],
    opts: &FistaOptions,
) -> Result<FistaOutcome> {
    let n = objective.dim();
    if w_init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: w_init.len(),
        });
    }
    let mut lip = opts
        .lipschitz
        .unwrap_or_else(|| estimate_lipschitz(objective));
    if !(lip > 0.0) {
        lip = 1.0;
    }
    let c = &objective.linear;

    let mut x = w_init.to_vec();
    let mut hx = vec![0.0; n];
    objective.hessian_apply(&x, &mut hx);
    let mut fx = objective.value_with(&x, &hx);
    let threshold = {
        let g0: Vec<f64> = hx.iter().zip(c).map(|(h, ci)| h + ci).collect();
        opts.tol * norm(&g0).max(norm(c))
    };

    let mut history = Vec::new();
    if opts.record_history {
        history.push(fx);
    }

    let mapping_at = |x: &[f64], hx: &[f64], lip: f64| -> f64 {
        let mut p: Vec<f64> = (0..n).map(|i| x[i] - (hx[i] + c[i]) / lip).collect();
        FrictionProx::new(&objective.l1, 1.0 / lip).apply_in_place(&mut p);
        lip * (0..n).map(|i| (x[i] - p[i]).powi(2)).sum::<f64>().sqrt()
    };

    let mut mapping = mapping_at(&x, &hx, lip);
    let mut y = x.clone();
    let mut hy = hx.clone();
    let mut t = 1.0_f64;
    let mut restarted = true;
    let mut x_new = vec![0.0; n];
    let mut hx_new = vec![0.0; n];
    let mut iterations = 0;

    while mapping > threshold && iterations < opts.max_iter {
        iterations += 1;
        for i in 0..n {
            x_new[i] = y[i] - (hy[i] + c[i]) / lip;
        }
        FrictionProx::new(&objective.l1, 1.0 / lip).apply_in_place(&mut x_new);
        objective.hessian_apply(&x_new, &mut hx_new);
        // F(x_new) − F(x) from the step itself, free of the cancellation in
        // the two objective values
        let mut change = objective.nonsmooth(&x_new) - objective.nonsmooth(&x);
        let mut noise = objective.nonsmooth(&x_new) + objective.nonsmooth(&x);
        for i in 0..n {
            let d = x_new[i] - x[i];
            let mid = 0.5 * (hx_new[i] + hx[i]);
            change += d * (mid + c[i]);
            noise += d.abs() * (mid.abs() + c[i].abs());
        }
        let increased = change > 8.0 * f64::EPSILON * noise;
        if opts.restart && increased {
            if restarted {
                // a plain proximal step from x increased F: the step constant
                // underestimates the curvature
                lip *= 2.0;
            }
            y.copy_from_slice(&x);
            hy.copy_from_slice(&hx);
            t = 1.0;
            restarted = true;
            continue;
        }

        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        for i in 0..n {
            y[i] = x_new[i] + beta * (x_new[i] - x[i]);
            hy[i] = hx_new[i] + beta * (hx_new[i] - hx[i]);
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut hx, &mut hx_new);
        fx += change;
        t = t_new;
        restarted = false;
        if opts.record_history {
            history.push(fx);
        }
        mapping = mapping_at(&x, &hx, lip);
    }

    Ok(FistaOutcome {
        converged: mapping <= threshold,
        objective: objective.value_with(&x, &hx),
        w: x,
        iterations,
        mapping_norm: mapping,
        lipschitz: lip,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_fem::{cg_solve, CgOptions};
    use nalgebra::DMatrix;
    use rand::Rng;

    fn soft(z: f64, tau: f64) -> f64 {
        z.signum() * (z.abs() - tau).max(0.0)
    }

    #[test]
    fn scalar_soft_threshold_oracle() {
        // F(w) = ½·2w² − 3w + |w|  ⇒  w* = soft(3/2, 1/2) = 1
        let h = DMatrix::from_element(1, 1, 2.0);
        let obj = CompositeQuadratic {
            hessian: &h,
            scale: 1.0,
            linear: vec![-3.0],
            l1: vec![(0, 1.0)],
        };
        let opts = FistaOptions {
            tol: 1e-12,
            ..Default::default()
        };
        let out = fista_minimize(&obj, &[0.0], &opts).unwrap();
        assert!(out.converged);
        assert!((out.w[0] - soft(1.5, 0.5)).abs() < 1e-12);
        assert!((out.w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_oracle_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a: f64 = rng.gen_range(0.1..10.0);
            let b: f64 = rng.gen_range(-5.0..5.0);
            let tau: f64 = rng.gen_range(0.0..3.0);
            let h = DMatrix::from_element(1, 1, a);
            let obj = CompositeQuadratic {
                hessian: &h,
                scale: 1.0,
                linear: vec![b],
                l1: vec![(0, tau)],
            };
            let out = fista_minimize(
                &obj,
                &[0.3],
                &FistaOptions {
                    tol: 1e-13,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(
                (out.w[0] - soft(-b / a, tau / a)).abs() < 1e-11,
                "a={a} b={b} tau={tau}: {out:?}"
            );
        }
    }

    #[test]
    fn identity_quadratic_matches_cg() {
        let n = 20;
        let h = DMatrix::<f64>::identity(n, n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let obj = CompositeQuadratic {
            hessian: &h,
            scale: 1.0,
            linear: b.clone(),
            l1: vec![],
        };
        let out = fista_minimize(&obj, &vec![0.0; n], &FistaOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.iterations < 30, "{} iterations", out.iterations);
        let rhs: Vec<f64> = b.iter().map(|v| -v).collect();
        let cg = cg_solve(&h, &rhs, &CgOptions::default(), None).unwrap();
        for i in 0..n {
            assert!((out.w[i] + b[i]).abs() < 1e-9);
            assert!((out.w[i] - cg.x[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn restart_keeps_objective_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 30;
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = &m * m.transpose() + DMatrix::identity(n, n) * 1e-3;
        let linear: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l1: Vec<(usize, f64)> = (0..n).step_by(3).map(|i| (i, 0.2)).collect();
        let obj = CompositeQuadratic {
            hessian: &h,
            scale: 1.0,
            linear,
            l1,
        };
        let opts = FistaOptions {
            record_history: true,
            tol: 1e-9,
            ..Default::default()
        };
        let out = fista_minimize(&obj, &vec![0.0; n], &opts).unwrap();
        assert!(out.converged);
        for pair in out.history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-14 * pair[0].abs(), "{pair:?}");
        }
        assert!(out.objective <= obj.value(&vec![0.0; n]));
    }

    #[test]
    fn underestimated_lipschitz_recovers() {
        let h = DMatrix::from_row_slice(2, 2, &[10.0, 1.0, 1.0, 3.0]);
        let obj = CompositeQuadratic {
            hessian: &h,
            scale: 1.0,
            linear: vec![1.0, -2.0],
            l1: vec![(1, 0.5)],
        };
        let opts = FistaOptions {
            lipschitz: Some(0.5),
            record_history: true,
            ..Default::default()
        };
        let out = fista_minimize(&obj, &[0.0, 0.0], &opts).unwrap();
        assert!(out.converged);
        assert!(out.lipschitz > 0.5);
        for pair in out.history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-14 * pair[0].abs(), "{pair:?}");
        }
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let h = DMatrix::from_row_slice(2, 2, &[1000.0, 0.0, 0.0, 0.001]);
        let obj = CompositeQuadratic {
            hessian: &h,
            scale: 1.0,
            linear: vec![1.0, 1.0],
            l1: vec![],
        };
        let out = fista_minimize(
            &obj,
            &[0.0, 0.0],
            &FistaOptions {
                max_iter: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 5);
        assert!(out.mapping_norm > 0.0);
    }

    #[test]
    fn lipschitz_estimate_brackets_spectrum() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 7.0, 3.0]));
        let obj = CompositeQuadratic {
            hessian: &h,
            scale: 0.5,
            linear: vec![0.0; 4],
            l1: vec![],
        };
        let l = estimate_lipschitz(&obj);
        assert!((3.5..=1.1 * 3.5 + 1e-9).contains(&l), "{l}");
    }
}
