//! Property checks of the whole pipeline, each reported as one outcome line.

use std::time::Instant;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Profile};
use super::metrics::gradient_norm;
use super::report::{ErrorReport, ErrorRow, Verdict};
use super::run::{build_problems, march_options, run_case, run_cell, run_sweep};
use crate::cell_solver::{
    arithmetic_mean_tensor, effective_tensor, harmonic_mean_tensor, solve_correctors,
};
use crate::error::Result;
use crate::materials::{CellConfig, CellLayout, ElasticTensor4};
use crate::mesh_fem::{cg_solve, CgOptions};
use crate::quasistatic::{stick_slip_check, vi_residual, Marcher};

/// Published cross-inset errors for `N = 4, 8, 16, 32`.
pub const PUBLISHED_CROSS_INSET: [(usize, f64, f64); 4] = [
    (4, 0.17981, 0.05691),
    (8, 0.18118, 0.04087),
    (16, 0.18116, 0.02897),
    (32, 0.18186, 0.02043),
];

/// Published full-cross errors for `N = 4, 8, 16, 32`.
pub const PUBLISHED_CROSS_FULL: [(usize, f64, f64); 4] = [
    (4, 0.20064, 0.08512),
    (8, 0.19946, 0.06018),
    (16, 0.19910, 0.04240),
    (32, 0.19914, 0.02987),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn max_component_diff(a: &ElasticTensor4, b: &ElasticTensor4) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    d = d.max((a.get(i, j, k, l) - b.get(i, j, k, l)).abs());
                }
            }
        }
    }
    d
}

/// `c'_{ijkl} = Q_ia Q_jb Q_kc Q_ld c_abcd`.
fn transform(t: &ElasticTensor4, q: &Matrix2<f64>) -> [[[[f64; 2]; 2]; 2]; 2] {
    let mut out = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut s = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            for c in 0..2 {
                                for d in 0..2 {
                                    s += q[(i, a)]
                                        * q[(j, b)]
                                        * q[(k, c)]
                                        * q[(l, d)]
                                        * t.get(a, b, c, d);
                                }
                            }
                        }
                    }
                    out[i][j][k][l] = s;
                }
            }
        }
    }
    out
}

/// Largest change of `t` under the generators of the square's symmetry
/// group (quarter turn, mirror `y₁ ↦ −y₁`), relative to `max |t|`.
pub fn square_symmetry_defect(t: &ElasticTensor4) -> f64 {
    let rot = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    let mirror = Matrix2::new(-1.0, 0.0, 0.0, 1.0);
    let mut worst: f64 = 0.0;
    for q in [rot, mirror] {
        let c = transform(t, &q);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        worst = worst.max((c[i][j][k][l] - t.get(i, j, k, l)).abs());
                    }
                }
            }
        }
    }
    worst / t.max_abs()
}

/// Effective tensor of a laminate whose phases alternate along `y₂`.
///
/// The cell problem reduces to an ODE in `y₂` whose solution has a constant
/// normal flux `σ_{α2}`; averaging the resulting piecewise-constant strain
/// gives `Â` in closed form. `fraction` is the volume fraction of phase 1.
pub fn laminate_tensor(
    a0: &ElasticTensor4,
    a1: &ElasticTensor4,
    fraction: f64,
) -> Result<ElasticTensor4> {
    let phases = [(a0, 1.0 - fraction), (a1, fraction)];
    let normal = |a: &ElasticTensor4| Matrix2::from_fn(|al, be| a.get(al, 1, be, 1));
    let mut mean_inv = Matrix2::zeros();
    for (a, w) in phases {
        mean_inv += normal(a).try_inverse().expect("coercive phase") * w;
    }
    let mean_inv_inv = mean_inv.try_inverse().expect("coercive phases");
    let mut out = [[[[0.0; 2]; 2]; 2]; 2];
    for gamma in 0..2 {
        for k in 0..2 {
            // flux of the unit gradient e_γ ⊗ e_k without correction
            let flux =
                |a: &ElasticTensor4| nalgebra::Vector2::from_fn(|al, _| a.get(al, 1, gamma, k));
            let mut rhs = nalgebra::Vector2::zeros();
            for (a, w) in phases {
                rhs += normal(a).try_inverse().expect("coercive phase") * flux(a) * w;
            }
            let s = mean_inv_inv * rhs;
            for (a, w) in phases {
                // corrector strain ∂₂χ^β = A22⁻¹ (s − flux)
                let d = normal(a).try_inverse().expect("coercive phase") * (s - flux(a));
                for alpha in 0..2 {
                    for i in 0..2 {
                        let mut v = a.get(alpha, i, gamma, k);
                        for beta in 0..2 {
                            v += a.get(alpha, i, beta, 1) * d[beta];
                        }
                        out[alpha][i][gamma][k] += w * v;
                    }
                }
            }
        }
    }
    ElasticTensor4::from_components(out)
}

/// Homogeneous cell: zero correctors, `Â = A`, and vanishing errors on a
/// 4×4-cell run with `cellres = 8`, `M = 32`.
pub fn check_trivial_homogenization() -> CheckOutcome {
    timed("trivial homogenization", || {
        let mut cfg = ExperimentConfig::profile(Profile::Desk);
        cfg.layout = CellLayout::Homogeneous;
        cfg.steps = 32;
        let (correctors, effective) = run_cell(&cfg)?;
        let chi_max = (0..2)
            .flat_map(|k| (0..2).map(move |g| (k, g)))
            .flat_map(|(k, g)| correctors.field(k, g).iter().copied())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let a = *cfg.cell_config()?.phase_tensor(0);
        let tensor_diff = max_component_diff(&effective.tensor, &a);
        let case = run_case(&cfg, 4)?;
        let passed = chi_max <= 1e-12
            && tensor_diff <= 1e-12
            && case.row.err1 <= 1e-6
            && case.row.err2 <= 1e-6;
        Ok((
            passed,
            format!(
                "max|chi| = {chi_max:.1e}, max|Â − A| = {tensor_diff:.1e}, Err1 = {:.1e}, Err2 = {:.1e}",
                case.row.err1, case.row.err2
            ),
        ))
    })
}

/// Symmetry, coercivity, Voigt–Reuss bounds and square symmetry of `Â` for
/// both cross layouts at cell resolution `n`.
pub fn check_effective_bounds(n: usize) -> CheckOutcome {
    timed("effective tensor bounds", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
        let mut details = Vec::new();
        let mut passed = true;
        for layout in [CellLayout::CrossInset, CellLayout::CrossFull] {
            let cfg = CellConfig::reference(layout);
            let eff = effective_tensor(&cfg, &solve_correctors(&cfg, n)?)?;
            let t = &eff.tensor;
            let voigt = arithmetic_mean_tensor(&cfg, n)?;
            let reuss = harmonic_mean_tensor(&cfg, n)?;
            let sym = t.symmetry_defect() / t.max_abs();
            let mut bound_violation: f64 = 0.0;
            for _ in 0..100 {
                let (a, b, c): (f64, f64, f64) = (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let xi = Matrix2::new(a, b, b, c);
                let q = t.quadratic_form(&xi);
                let upper = voigt.quadratic_form(&xi);
                let lower = reuss.quadratic_form(&xi);
                bound_violation = bound_violation
                    .max((q - upper) / upper)
                    .max((lower - q) / lower);
            }
            let d4 = square_symmetry_defect(t);
            let ok = sym <= 1e-10 && t.coercivity() > 0.0 && bound_violation <= 1e-9 && d4 <= 1e-8;
            passed &= ok;
            details.push(format!(
                "{}: sym {sym:.1e}, m {:.3}, bound excess {bound_violation:.1e}, D4 {d4:.1e}",
                layout.name(),
                t.coercivity()
            ));
        }
        Ok((passed, details.join("; ")))
    })
}

/// Layered cell against the closed-form laminate tensor.
pub fn check_laminate(n: usize) -> CheckOutcome {
    timed("laminate oracle", || {
        let cfg = CellConfig::reference(CellLayout::Layered);
        let eff = effective_tensor(&cfg, &solve_correctors(&cfg, n)?)?;
        let oracle = laminate_tensor(cfg.phase_tensor(0), cfg.phase_tensor(1), 0.25)?;
        let rel = max_component_diff(&eff.tensor, &oracle) / oracle.max_abs();
        Ok((
            rel <= 1e-6,
            format!("max relative deviation {rel:.2e} at n = {n}"),
        ))
    })
}

/// Discrete variational inequality and stick/slip dichotomy at every step of
/// the oscillating problem (`N = 4`, desk profile).
pub fn check_vi_optimality(config: &ExperimentConfig) -> CheckOutcome {
    timed("VI optimality", || {
        let n = config.n_cells[0];
        let (_, effective) = run_cell(config)?;
        let (_, _, problem, _) = build_problems(config, n, &effective)?;
        let opts = march_options(config);
        let delta = 10.0 * config.tol_opt;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED0F_u64);
        let mut marcher = Marcher::new(&problem, &opts)?;
        let mut worst_vi = f64::INFINITY;
        let mut worst_slip: f64 = 0.0;
        let (mut stick, mut slip) = (0, 0);
        let mut unconverged = 0;
        while !marcher.is_done() {
            let rec = marcher.advance()?;
            if !rec.diagnostics.converged {
                unconverged += 1;
            }
            let w_norm = rec.w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            for _ in 0..50 {
                let s = 10f64.powf(rng.gen_range(-4.0..1.0)) * w_norm / (rec.w.len() as f64).sqrt();
                let v: Vec<f64> = rec
                    .w
                    .iter()
                    .map(|wi| wi + s * rng.gen_range(-1.0..1.0))
                    .collect();
                let (res, scale) = vi_residual(&problem, rec.u, rec.w, rec.time, &v);
                worst_vi = worst_vi.min(res / scale);
            }
            let report = stick_slip_check(&problem, rec.u, rec.w, rec.time);
            worst_slip = worst_slip.max(report.worst_defect);
            stick = report.stick;
            slip = report.slip;
        }
        let passed = worst_vi >= -1e-8 && worst_slip <= delta && unconverged == 0;
        Ok((
            passed,
            format!(
                "min residual/scale {worst_vi:.2e}, worst stick/slip defect {worst_slip:.2e} (δ = {delta:.0e}), \
                 final stick/slip {stick}/{slip}, unconverged steps {unconverged}"
            ),
        ))
    })
}

/// With `H_T = 0` every snapshot equals an independent CG solve of
/// `K u = L(tₘ)` in the H¹ seminorm.
pub fn check_frictionless_limit(config: &ExperimentConfig) -> CheckOutcome {
    timed("frictionless limit", || {
        let mut cfg = config.clone();
        cfg.friction_bound = 0.0;
        let n = cfg.n_cells[0];
        let (_, effective) = run_cell(&cfg)?;
        let (mesh, dofs, problem, _) = build_problems(&cfg, n, &effective)?;
        let opts = march_options(&cfg);
        let cg = CgOptions {
            tol: 1e-13,
            max_iter: Some(200_000),
            jacobi: true,
        };
        let mut marcher = Marcher::new(&problem, &opts)?;
        let mut worst: f64 = 0.0;
        while !marcher.is_done() {
            let rec = marcher.advance()?;
            let direct = cg_solve(&problem.stiffness, &problem.load_at(rec.time), &cg, None)?.x;
            let diff: Vec<f64> = rec.u.iter().zip(&direct).map(|(a, b)| a - b).collect();
            let rel = gradient_norm(&mesh, &dofs.expand(&diff))
                / gradient_norm(&mesh, &dofs.expand(&direct));
            worst = worst.max(rel);
        }
        Ok((
            worst <= 1e-7,
            format!(
                "max relative H1-seminorm deviation {worst:.2e} over {} steps",
                cfg.steps
            ),
        ))
    })
}

/// Desk sweep of the cross-inset cell: rate band and `Err₁` plateau.
pub fn check_rate(config: &ExperimentConfig) -> CheckOutcome {
    timed("rate reproduction", || {
        let sweep = run_sweep(config)?;
        let s = sweep.summary;
        let rows: Vec<String> = sweep
            .report
            .rows
            .iter()
            .map(|r| format!("N={} Err1={:.5} Err2={:.5}", r.n, r.err1, r.err2))
            .collect();
        Ok((
            s.verdict == Verdict::Pass,
            format!(
                "r = {:.4} (band {:.2}..{:.2}), Err1 max/min = {:.4}; {}",
                s.rate,
                0.5 - s.tol_r,
                0.5 + s.tol_r,
                s.err1_ratio,
                rows.join(", ")
            ),
        ))
    })
}

/// Full-resolution sweeps of both cross layouts against the published
/// errors, 2 % per entry.
pub fn check_published_tables(base: &ExperimentConfig) -> CheckOutcome {
    timed("published tables", || {
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        for (layout, table) in [
            (CellLayout::CrossInset, PUBLISHED_CROSS_INSET),
            (CellLayout::CrossFull, PUBLISHED_CROSS_FULL),
        ] {
            let mut cfg = base.clone();
            cfg.layout = layout;
            cfg.n_cells = table.iter().map(|r| r.0).collect();
            let sweep = run_sweep(&cfg)?;
            for (row, &(n, e1, e2)) in sweep.report.rows.iter().zip(&table) {
                let dev = ((row.err1 - e1) / e1)
                    .abs()
                    .max(((row.err2 - e2) / e2).abs());
                worst = worst.max(dev);
                details.push(format!(
                    "{} N={n}: {:.5}/{:.5}",
                    layout.name(),
                    row.err1,
                    row.err2
                ));
            }
        }
        Ok((
            worst <= 0.02,
            format!(
                "worst relative deviation {worst:.3}; {}",
                details.join(", ")
            ),
        ))
    })
}

/// The verdict rejects an `Err₂ ∝ ε` column and accepts the published one.
pub fn check_negative_control() -> CheckOutcome {
    timed("negative control", || {
        let published = ErrorReport::new(
            PUBLISHED_CROSS_INSET
                .iter()
                .map(|&(n, e1, e2)| ErrorRow::from_errors(n, 32, e1, e2))
                .collect(),
        );
        let good = published.summarize(0.1)?;
        let linear = ErrorReport::new(
            PUBLISHED_CROSS_INSET
                .iter()
                .map(|&(n, e1, _)| ErrorRow::from_errors(n, 32, e1, 0.2 / n as f64))
                .collect(),
        );
        let bad = linear.summarize(0.1)?;
        Ok((
            good.verdict == Verdict::Pass && bad.verdict == Verdict::Fail,
            format!(
                "published: r = {:.4} {}; linear: r = {:.4} {}",
                good.rate,
                good.verdict.as_str(),
                bad.rate,
                bad.verdict.as_str()
            ),
        ))
    })
}

/// Desk-profile configuration restricted to `N = 4`.
pub fn desk_single() -> ExperimentConfig {
    ExperimentConfig::profile(Profile::Desk).single(4)
}
