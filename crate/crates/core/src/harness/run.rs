use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{step_norms, ErrorTracker};
use super::report::{ErrorReport, ErrorRow, RateSummary};
use crate::cell_solver::{effective_tensor, solve_correctors, CorrectorSet, EffectiveTensor};
use crate::error::{Error, Result};
use crate::mesh_fem::{CgOptions, DofMap, StructuredMesh};
use crate::quasistatic::{
    FistaOptions, MarchOptions, Marcher, QuasistaticProblem, StepDiagnostics, StepRecord,
};

/// Everything produced by one `N`.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub row: ErrorRow,
    pub effective: EffectiveTensor,
    pub errors: ErrorTracker,
    pub oscillating: Vec<StepDiagnostics>,
    pub homogenized: Vec<StepDiagnostics>,
}

impl CaseResult {
    /// Steps where either optimizer stopped at its iteration cap.
    pub fn unconverged_steps(&self) -> usize {
        self.oscillating
            .iter()
            .chain(&self.homogenized)
            .filter(|d| !d.converged)
            .count()
    }
}

pub fn march_options(config: &ExperimentConfig) -> MarchOptions {
    MarchOptions {
        fista: FistaOptions {
            tol: config.tol_opt,
            ..Default::default()
        },
        cg: CgOptions {
            tol: config.tol_cg,
            ..Default::default()
        },
        ..Default::default()
    }
}

/// Cell stage: correctors at `cellres` and the homogenized tensor.
pub fn run_cell(config: &ExperimentConfig) -> Result<(CorrectorSet, EffectiveTensor)> {
    let cell = config.cell_config().map_err(|e| e.at_stage("cell"))?;
    let correctors = solve_correctors(&cell, config.cellres).map_err(|e| e.at_stage("cell"))?;
    let effective = effective_tensor(&cell, &correctors).map_err(|e| e.at_stage("cell"))?;
    Ok((correctors, effective))
}

/// The oscillating and homogenized problems for `N` cells on a shared mesh.
pub fn build_problems(
    config: &ExperimentConfig,
    n: usize,
    effective: &EffectiveTensor,
) -> Result<(
    StructuredMesh,
    DofMap,
    QuasistaticProblem,
    QuasistaticProblem,
)> {
    let cell = config.cell_config().map_err(|e| e.at_stage("mesh"))?;
    let mesh = StructuredMesh::benchmark(config.mesh_size(n)).map_err(|e| e.at_stage("mesh"))?;
    let dofs = DofMap::new(&mesh);
    let eps = 1.0 / n as f64;
    let loading = config.loading();
    let time = config.time_grid();
    let oscillating = QuasistaticProblem::benchmark(
        &mesh,
        &dofs,
        |e| *cell.epsilon_coefficient_at(eps, mesh.element_centroid(e)),
        &loading,
        time,
    )
    .map_err(|e| e.at_stage("assemble oscillating"))?;
    let homogenized =
        QuasistaticProblem::benchmark(&mesh, &dofs, |_| effective.tensor, &loading, time)
            .map_err(|e| e.at_stage("assemble homogenized"))?;
    Ok((mesh, dofs, oscillating, homogenized))
}

/// Runs one `N`: cell problem, both marches in lockstep, error maxima.
///
/// `observer` sees the oscillating and homogenized records of every step.
pub fn run_case_with(
    config: &ExperimentConfig,
    n: usize,
    mut observer: impl FnMut(&StepRecord<'_>, &StepRecord<'_>) -> Result<()>,
) -> Result<CaseResult> {
    let started = Instant::now();
    config.validate()?;
    let (correctors, effective) = run_cell(config)?;
    let (mesh, dofs, p_eps, p_hom) = build_problems(config, n, &effective)?;
    let opts = march_options(config);
    let eps = 1.0 / n as f64;

    let mut march_eps = Marcher::new(&p_eps, &opts).map_err(|e| e.at_stage("march oscillating"))?;
    let mut march_hom = Marcher::new(&p_hom, &opts).map_err(|e| e.at_stage("march homogenized"))?;
    let mut errors = ErrorTracker::new();
    let mut diag_eps = Vec::with_capacity(config.steps);
    let mut diag_hom = Vec::with_capacity(config.steps);
    while !march_eps.is_done() {
        let r_eps = march_eps
            .advance()
            .map_err(|e| e.at_stage("march oscillating"))?;
        let r_hom = march_hom
            .advance()
            .map_err(|e| e.at_stage("march homogenized"))?;
        diag_eps.push(*r_eps.diagnostics);
        diag_hom.push(*r_hom.diagnostics);
        let u_eps = dofs.expand(r_eps.u);
        let u_hom = dofs.expand(r_hom.u);
        let norms = step_norms(&mesh, &u_eps, &u_hom, Some((&correctors, eps)));
        errors
            .record(r_eps.step, &norms)
            .map_err(|e| e.at_stage("errors"))?;
        observer(&r_eps, &r_hom).map_err(|e| e.at_step(r_eps.step).at_stage("observer"))?;
    }

    let row = ErrorRow {
        n,
        eps,
        h: mesh.h()[0],
        err1: errors.err1,
        err2: errors.err2,
        l2_relative: errors.l2_relative,
        runtime_secs: started.elapsed().as_secs_f64(),
    };
    Ok(CaseResult {
        row,
        effective,
        errors,
        oscillating: diag_eps,
        homogenized: diag_hom,
    })
}

pub fn run_case(config: &ExperimentConfig, n: usize) -> Result<CaseResult> {
    run_case_with(config, n, |_, _| Ok(()))
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cases: Vec<CaseResult>,
    pub report: ErrorReport,
    pub summary: RateSummary,
}

/// Runs every `N` of the configuration (concurrently when the thread pool
/// allows) and fits the rate.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut ns = config.n_cells.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::InsufficientRows {
            needed: 2,
            got: ns.len(),
        });
    }
    let cases: Vec<CaseResult> = ns
        .par_iter()
        .map(|&n| run_case(config, n))
        .collect::<Result<_>>()?;
    let report = ErrorReport::new(cases.iter().map(|c| c.row.clone()).collect());
    let summary = report.summarize(config.tol_r)?;
    Ok(SweepResult {
        cases,
        report,
        summary,
    })
}

/// Writes `report.csv`, `rates.txt` and `runs.txt` (per-row metadata) into `dir`.
pub fn write_sweep_outputs(dir: &Path, sweep: &SweepResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), sweep.report.to_csv())?;
    let mut rates = Vec::new();
    sweep.summary.write(&mut rates)?;
    fs::write(dir.join("rates.txt"), rates)?;
    let mut meta = String::from("N l2_relative triangle_excess unconverged_steps runtime_secs\n");
    for c in &sweep.cases {
        meta.push_str(&format!(
            "{} {:e} {:e} {} {:.3}\n",
            c.row.n,
            c.row.l2_relative,
            c.errors.triangle_excess,
            c.unconverged_steps(),
            c.row.runtime_secs
        ));
    }
    fs::write(dir.join("runs.txt"), meta)?;
    Ok(())
}
