use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tresca_homog::harness::gradient_norm;
use tresca_homog::materials::{CellConfig, CellLayout};
use tresca_homog::mesh_fem::{DofMap, StructuredMesh};
use tresca_homog::quasistatic::*;

fn problem(
    n: usize,
    layout: CellLayout,
    cells: f64,
    loading: TrescaLoading,
    steps: usize,
) -> (StructuredMesh, DofMap, QuasistaticProblem) {
    let mesh = StructuredMesh::benchmark(n).unwrap();
    let dofs = DofMap::new(&mesh);
    let cfg = CellConfig::reference(layout);
    let p = QuasistaticProblem::benchmark(
        &mesh,
        &dofs,
        |e| *cfg.epsilon_coefficient_at(1.0 / cells, mesh.element_centroid(e)),
        &loading,
        TimeGrid { t_end: 1.0, steps },
    )
    .unwrap();
    (mesh, dofs, p)
}

fn dense_solve(p: &QuasistaticProblem, t: f64) -> Vec<f64> {
    let k = p.stiffness.to_dense();
    let l = DVector::from_vec(p.load_at(t));
    k.cholesky().unwrap().solve(&l).data.into()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    d / b.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn zero_load_gives_zero_initial_state() {
    let loading = TrescaLoading {
        body_force: [0.0, 0.0],
        ..Default::default()
    };
    let (_, _, p) = problem(8, CellLayout::CrossInset, 2.0, loading, 4);
    let u0 = solve_initial(&p, &MarchOptions::default()).unwrap();
    assert!(u0.iter().all(|&v| v == 0.0));
}

#[test]
fn gravity_sag_matches_dense_oracle_and_points_down() {
    let (mesh, dofs, p) = problem(8, CellLayout::Homogeneous, 1.0, TrescaLoading::default(), 4);
    let u0 = solve_initial(&p, &MarchOptions::default()).unwrap();
    assert!(rel_diff(&u0, &dense_solve(&p, 0.0)) < 1e-10);
    let full = dofs.expand(&u0);
    for i in 1..8 {
        let node = mesh.node_id(i, 1);
        assert!(full[2 * node + 1] <= 0.0, "node ({i},1) moved up");
    }
}

#[test]
fn initial_state_equals_frictionless_optimizer_step() {
    let (_, _, p) = problem(8, CellLayout::CrossInset, 2.0, TrescaLoading::default(), 1);
    let u0 = solve_initial(&p, &MarchOptions::default()).unwrap();
    // Δt = 1, u_prev = 0, H_T = 0: the minimizer solves K w = L(0)
    let mut objective = step_objective(&p, &vec![0.0; p.dim()], 0.0);
    objective.l1.iter_mut().for_each(|(_, a)| *a = 0.0);
    let opts = FistaOptions {
        tol: 1e-12,
        max_iter: 200_000,
        ..Default::default()
    };
    let out = fista_minimize(&objective, &vec![0.0; p.dim()], &opts).unwrap();
    assert!(
        out.converged,
        "{} iterations, mapping {}",
        out.iterations, out.mapping_norm
    );
    assert!(rel_diff(&out.w, &u0) < 1e-8, "{}", rel_diff(&out.w, &u0));
}

#[test]
fn frictionless_march_follows_linear_solves() {
    let loading = TrescaLoading {
        friction_bound: 0.0,
        ..Default::default()
    };
    let (_, _, p) = problem(8, CellLayout::CrossInset, 2.0, loading, 8);
    for strategy in [StepStrategy::Condensed, StepStrategy::FullSpace] {
        let opts = MarchOptions {
            strategy,
            fista: FistaOptions {
                tol: 1e-12,
                max_iter: 200_000,
                ..Default::default()
            },
            ..Default::default()
        };
        let sol = march(&p, &opts).unwrap();
        assert_eq!(sol.snapshots.len(), 9);
        for (m, u) in sol.snapshots.iter().enumerate().skip(1) {
            let direct = dense_solve(&p, sol.times[m]);
            assert!(
                rel_diff(u, &direct) < 1e-7,
                "{strategy:?} step {m}: {}",
                rel_diff(u, &direct)
            );
        }
    }
}

#[test]
fn equilibrium_load_gives_zero_velocity() {
    let (_, _, p) = problem(6, CellLayout::CrossFull, 2.0, TrescaLoading::default(), 4);
    let u: Vec<f64> = (0..p.dim())
        .map(|i| 1e-3 * (0.1 * i as f64).sin())
        .collect();
    let load = AffineLoad {
        base: p.stiffness.mul(&u),
        rate: vec![0.0; p.dim()],
    };
    let p = QuasistaticProblem::new(
        p.stiffness.clone(),
        load,
        p.friction_bound,
        p.contact.clone(),
        p.time,
    )
    .unwrap();
    let objective = step_objective(&p, &u, 0.5);
    let out = fista_minimize(&objective, &vec![0.0; p.dim()], &FistaOptions::default()).unwrap();
    assert_eq!(out.iterations, 0);
    assert!(out.w.iter().all(|&v| v == 0.0));
}

#[test]
fn huge_friction_bound_sticks_everywhere() {
    let loading = TrescaLoading {
        friction_bound: 1e3 * 0.08,
        ..Default::default()
    };
    let (_, _, p) = problem(8, CellLayout::CrossInset, 2.0, loading, 16);
    let sol = march(&p, &MarchOptions::default()).unwrap();
    let u0 = &sol.snapshots[0];
    for (m, u) in sol.snapshots.iter().enumerate() {
        for c in &p.contact {
            assert_eq!(
                u[c.dof], u0[c.dof],
                "contact DOF {} moved at step {m}",
                c.dof
            );
        }
    }
    for m in 1..sol.snapshots.len() {
        let w: Vec<f64> = sol.snapshots[m]
            .iter()
            .zip(&sol.snapshots[m - 1])
            .map(|(a, b)| (a - b) * 16.0)
            .collect();
        let report = stick_slip_check(&p, &sol.snapshots[m], &w, sol.times[m]);
        assert_eq!(report.slip, 0);
        assert!(report.holds(1e-12));
    }
}

#[test]
fn homogeneous_march_satisfies_variational_inequality() {
    let (_, _, p) = problem(
        8,
        CellLayout::Homogeneous,
        1.0,
        TrescaLoading::default(),
        16,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut marcher = Marcher::new(&p, &MarchOptions::default()).unwrap();
    while !marcher.is_done() {
        let rec = marcher.advance().unwrap();
        assert!(rec.diagnostics.converged);
        for _ in 0..50 {
            let v: Vec<f64> = rec
                .w
                .iter()
                .map(|w| w + rng.gen_range(-1e-2..1e-2))
                .collect();
            let (res, scale) = vi_residual(&p, rec.u, rec.w, rec.time, &v);
            assert!(
                res >= -1e-8 * scale,
                "step {}: {res} vs scale {scale}",
                rec.step
            );
        }
        assert!(stick_slip_check(&p, rec.u, rec.w, rec.time).holds(1e-9));
    }
}

#[test]
fn condensed_and_full_space_agree_with_friction() {
    let (_, _, p) = problem(8, CellLayout::CrossInset, 2.0, TrescaLoading::default(), 8);
    let fista = FistaOptions {
        tol: 1e-12,
        max_iter: 500_000,
        ..Default::default()
    };
    let a = march(
        &p,
        &MarchOptions {
            fista,
            ..Default::default()
        },
    )
    .unwrap();
    let b = march(
        &p,
        &MarchOptions {
            fista,
            strategy: StepStrategy::FullSpace,
            ..Default::default()
        },
    )
    .unwrap();
    for m in 1..=8 {
        assert!(
            rel_diff(&b.snapshots[m], &a.snapshots[m]) < 1e-7,
            "full space, step {m}"
        );
    }
}

#[test]
fn halving_time_step_is_stable() {
    let norm_max = |steps: usize| {
        let (mesh, dofs, p) = problem(
            16,
            CellLayout::CrossInset,
            4.0,
            TrescaLoading::default(),
            steps,
        );
        let sol = march(&p, &MarchOptions::default()).unwrap();
        sol.snapshots
            .iter()
            .map(|u| gradient_norm(&mesh, &dofs.expand(u)))
            .fold(0.0, f64::max)
    };
    let coarse = norm_max(16);
    let fine = norm_max(32);
    assert!(((coarse - fine) / fine).abs() < 0.01, "{coarse} vs {fine}");
}

#[test]
fn march_is_deterministic() {
    let (_, _, p) = problem(8, CellLayout::CrossInset, 2.0, TrescaLoading::default(), 8);
    let a = march(&p, &MarchOptions::default()).unwrap();
    let b = march(&p, &MarchOptions::default()).unwrap();
    assert_eq!(a.snapshots, b.snapshots);
    assert_eq!(a.diagnostics, b.diagnostics);
}

#[test]
fn observer_sees_every_step_and_errors_carry_step() {
    let (_, _, p) = problem(4, CellLayout::CrossInset, 1.0, TrescaLoading::default(), 5);
    let mut seen = Vec::new();
    let (u, diag) = march_with(&p, &MarchOptions::default(), |r| {
        seen.push(r.step);
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, vec![1, 2, 3, 4, 5]);
    assert_eq!(diag.len(), 5);
    assert_eq!(u, march(&p, &MarchOptions::default()).unwrap().snapshots[5]);

    let err = march_with(&p, &MarchOptions::default(), |r| {
        if r.step == 3 {
            Err(tresca_homog::Error::Config("stop".into()))
        } else {
            Ok(())
        }
    })
    .unwrap_err();
    assert!(
        matches!(err, tresca_homog::Error::Step { step: 3, .. }),
        "{err:?}"
    );
}

#[test]
fn snapshot_and_diagnostics_export() {
    let (mesh, dofs, p) = problem(4, CellLayout::CrossInset, 1.0, TrescaLoading::default(), 2);
    let sol = march(&p, &MarchOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_snapshot_csv(&mesh, &dofs, &sol.snapshots[2], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,u1,u2");
    assert_eq!(lines.len(), 1 + 25);
    // right edge is clamped
    assert!(lines[5].starts_with("1,0,0e0,0e0"), "{}", lines[5]);
    let mut log = Vec::new();
    write_diagnostics(&sol.diagnostics, &mut log).unwrap();
    assert_eq!(String::from_utf8(log).unwrap().lines().count(), 2);
}

#[test]
fn dense_hessian_objective_matches_sparse() {
    let (_, _, p) = problem(4, CellLayout::CrossInset, 1.0, TrescaLoading::default(), 2);
    let u = dense_solve(&p, 0.0);
    let sparse = step_objective(&p, &u, 1.0);
    let dense: DMatrix<f64> = p.stiffness.to_dense();
    let other = CompositeQuadratic {
        hessian: &dense,
        scale: sparse.scale,
        linear: sparse.linear.clone(),
        l1: sparse.l1.clone(),
    };
    let w: Vec<f64> = (0..p.dim()).map(|i| (i as f64).sin()).collect();
    assert!((sparse.value(&w) - other.value(&w)).abs() < 1e-12 * sparse.value(&w).abs().max(1.0));
}
