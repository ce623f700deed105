use nalgebra::{DMatrix, DVector};
use tresca_homog::harness::*;
use tresca_homog::materials::CellLayout;
use tresca_homog::mesh_fem::{DofMap, StructuredMesh};
use tresca_homog::quasistatic::{march, MarchOptions, QuasistaticProblem, TimeGrid, TrescaLoading};
use tresca_homog::Error;

fn small(layout: CellLayout) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::profile(Profile::Desk);
    cfg.layout = layout;
    cfg.n_cells = vec![2, 4];
    cfg.cellres = 4;
    cfg.steps = 8;
    cfg
}

/// Slope by normal equations on `[1, log₂ x]`.
fn lsq_slope(x: &[f64], y: &[f64]) -> f64 {
    let a = DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i].log2() });
    let b = DVector::from_iterator(y.len(), y.iter().map(|v| v.log2()));
    let ata = a.transpose() * &a;
    let coef = ata.cholesky().unwrap().solve(&(a.transpose() * b));
    coef[1]
}

fn table(rows: &[(usize, f64, f64)]) -> ErrorReport {
    ErrorReport::new(
        rows.iter()
            .map(|&(n, e1, e2)| ErrorRow::from_errors(n, 32, e1, e2))
            .collect(),
    )
}

#[test]
fn published_cross_inset_rate() {
    let eps: Vec<f64> = PUBLISHED_CROSS_INSET
        .iter()
        .map(|r| 1.0 / r.0 as f64)
        .collect();
    let err2: Vec<f64> = PUBLISHED_CROSS_INSET.iter().map(|r| r.2).collect();
    let oracle = lsq_slope(&eps, &err2);
    assert!((oracle - 0.49).abs() < 0.01);
    let summary = table(&PUBLISHED_CROSS_INSET).summarize(0.1).unwrap();
    assert!((summary.rate - oracle).abs() < 1e-12);
    assert_eq!(summary.verdict, Verdict::Pass);
    assert!(summary.err1_ratio < 1.15);
}

#[test]
fn linear_column_fails() {
    let rows: Vec<(usize, f64, f64)> = PUBLISHED_CROSS_INSET
        .iter()
        .map(|&(n, e1, _)| (n, e1, 0.3 / n as f64))
        .collect();
    let summary = table(&rows).summarize(0.1).unwrap();
    assert!((summary.rate - 1.0).abs() < 1e-12);
    assert_eq!(summary.verdict, Verdict::Fail);
}

#[test]
fn plateau_violation_fails() {
    let rows: Vec<(usize, f64, f64)> = PUBLISHED_CROSS_INSET
        .iter()
        .map(|&(n, _, e2)| (n, 0.1 * (n as f64).sqrt(), e2))
        .collect();
    assert_eq!(table(&rows).summarize(0.1).unwrap().verdict, Verdict::Fail);
}

#[test]
fn published_cross_full_doubling_ratios() {
    let expected = [1.414, 1.419, 1.420];
    for (k, pair) in PUBLISHED_CROSS_FULL.windows(2).enumerate() {
        let ratio = pair[0].2 / pair[1].2;
        assert!((ratio - expected[k]).abs() < 1e-3, "{ratio}");
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.05);
    }
    assert_eq!(
        table(&PUBLISHED_CROSS_FULL).summarize(0.1).unwrap().verdict,
        Verdict::Pass
    );
}

#[test]
fn sweep_needs_two_rows() {
    let report = table(&PUBLISHED_CROSS_INSET[..1]);
    assert!(matches!(
        report.summarize(0.1),
        Err(Error::InsufficientRows { needed: 2, got: 1 })
    ));
    let cfg = small(CellLayout::CrossInset).single(2);
    assert!(matches!(
        run_sweep(&cfg),
        Err(Error::InsufficientRows { .. })
    ));
}

#[test]
fn err_metrics_on_synthetic_snapshots() {
    let mesh = StructuredMesh::benchmark(8).unwrap();
    let dofs = DofMap::new(&mesh);
    let p = QuasistaticProblem::benchmark(
        &mesh,
        &dofs,
        |_| {
            *tresca_homog::materials::CellConfig::reference(CellLayout::Homogeneous).phase_tensor(0)
        },
        &TrescaLoading::default(),
        TimeGrid {
            t_end: 1.0,
            steps: 3,
        },
    )
    .unwrap();
    let sol = march(&p, &MarchOptions::default()).unwrap();
    let u0: Vec<Vec<f64>> = sol.snapshots.iter().map(|u| dofs.expand(u)).collect();
    let doubled: Vec<Vec<f64>> = u0
        .iter()
        .map(|u| u.iter().map(|v| 2.0 * v).collect())
        .collect();
    assert_eq!(compute_err1(&mesh, &u0, &u0).unwrap(), 0.0);
    assert!((compute_err1(&mesh, &doubled, &u0).unwrap() - 1.0).abs() < 1e-12);

    let zero = vec![vec![0.0; u0[0].len()]; u0.len()];
    assert!(matches!(
        compute_err1(&mesh, &u0, &zero),
        Err(Error::ZeroReference { step: 1 })
    ));
}

#[test]
fn homogeneous_case_has_no_error() {
    let case = run_case(&small(CellLayout::Homogeneous), 2).unwrap();
    assert!(
        case.row.err1 <= 1e-6 && case.row.err2 <= 1e-6,
        "{:?}",
        case.row
    );
    assert_eq!(case.unconverged_steps(), 0);
}

#[test]
fn triangle_inequality_holds_every_step() {
    let cfg = small(CellLayout::CrossFull);
    let case = run_case(&cfg, 4).unwrap();
    assert_eq!(case.errors.steps, cfg.steps);
    assert!(
        case.errors.triangle_excess <= 1e-12,
        "{}",
        case.errors.triangle_excess
    );
    assert!(case.row.err1 > 0.0 && case.row.err2 > 0.0);
    assert!(case.row.l2_relative.is_finite());
}

#[test]
fn errors_are_invariant_under_load_scaling() {
    let base = small(CellLayout::CrossInset);
    let mut scaled = base.clone();
    scaled.f2 *= 10.0;
    scaled.trac_a *= 10.0;
    scaled.trac_b *= 10.0;
    scaled.friction_bound *= 10.0;
    let a = run_case(&base, 4).unwrap().row;
    let b = run_case(&scaled, 4).unwrap().row;
    assert!(
        (a.err1 - b.err1).abs() <= 1e-8 * a.err1,
        "{} vs {}",
        a.err1,
        b.err1
    );
    assert!(
        (a.err2 - b.err2).abs() <= 1e-8 * a.err2,
        "{} vs {}",
        a.err2,
        b.err2
    );
}

#[test]
fn single_thread_reports_are_identical() {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let cfg = small(CellLayout::CrossInset);
    let first = pool.install(|| run_sweep(&cfg)).unwrap();
    let second = pool.install(|| run_sweep(&cfg)).unwrap();
    assert_eq!(first.report.to_csv(), second.report.to_csv());
    for (a, b) in first.report.rows.iter().zip(&second.report.rows) {
        assert_eq!(
            (a.err1.to_bits(), a.err2.to_bits(), a.l2_relative.to_bits()),
            (b.err1.to_bits(), b.err2.to_bits(), b.l2_relative.to_bits())
        );
    }
    assert!(first
        .report
        .to_csv()
        .starts_with("N,eps,h,err1,err2\n2,0.50000,0.12500,"));
}

#[test]
fn sweep_outputs_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = run_sweep(&small(CellLayout::CrossInset)).unwrap();
    write_sweep_outputs(dir.path(), &sweep).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let rates = std::fs::read_to_string(dir.path().join("rates.txt")).unwrap();
    assert!(rates.contains("verdict = PASS") || rates.contains("verdict = FAIL"));
    assert!(rates.starts_with("rate = "));
    assert!(dir.path().join("runs.txt").exists());
}

#[test]
fn failing_stage_is_named() {
    let mut cfg = small(CellLayout::CrossInset);
    cfg.phase1.nu = 0.7;
    match run_case(&cfg, 2) {
        Err(Error::Config(_)) | Err(Error::InvalidPhase { .. }) => {}
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "cell"),
        other => panic!("unexpected {other:?}"),
    }
}
