use std::io::Write;
use std::path::Path;

use super::condensed::CondensedSystem;
use super::fista::{estimate_lipschitz, fista_minimize, FistaOptions};
use super::problem::{step_objective, QuasistaticProblem};
use crate::error::{Error, Result};
use crate::mesh_fem::{cg_solve, CgOptions, DofMap, StructuredMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepStrategy {
    /// Minimize over the contact DOFs after static condensation.
    #[default]
    Condensed,
    /// Minimize over every reduced DOF with the sparse stiffness.
    FullSpace,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MarchOptions {
    pub fista: FistaOptions,
    pub cg: CgOptions,
    pub strategy: StepStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub iterations: usize,
    pub mapping_norm: f64,
    pub converged: bool,
    pub objective: f64,
}

/// State handed to observers after step `step` (`u_prev = uᵐ⁻¹`, `u = uᵐ`).
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<'a> {
    pub step: usize,
    pub time: f64,
    pub u_prev: &'a [f64],
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub diagnostics: &'a StepDiagnostics,
}

#[derive(Debug, Clone)]
pub struct QuasistaticSolution {
    pub times: Vec<f64>,
    /// Reduced displacements `u⁰ … uᴹ`.
    pub snapshots: Vec<Vec<f64>>,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// `u⁰` with `K u⁰ = L(0)`.
pub fn solve_initial(problem: &QuasistaticProblem, opts: &MarchOptions) -> Result<Vec<f64>> {
    Ok(cg_solve(&problem.stiffness, &problem.load_at(0.0), &opts.cg, None)?.x)
}

enum Engine {
    Condensed(Box<CondensedSystem>),
    FullSpace { lipschitz: f64 },
}

/// Sequential time stepper; each call to [`Marcher::advance`] performs one step.
pub struct Marcher<'p> {
    problem: &'p QuasistaticProblem,
    opts: MarchOptions,
    engine: Engine,
    step: usize,
    u: Vec<f64>,
    w: Vec<f64>,
    u_prev: Vec<f64>,
    last: Option<StepDiagnostics>,
}

impl<'p> Marcher<'p> {
    pub fn new(problem: &'p QuasistaticProblem, opts: &MarchOptions) -> Result<Self> {
        let u0 = solve_initial(problem, opts).map_err(|e| e.at_step(0))?;
        Self::from_initial(problem, opts, u0)
    }

    pub fn from_initial(
        problem: &'p QuasistaticProblem,
        opts: &MarchOptions,
        u0: Vec<f64>,
    ) -> Result<Self> {
        let n = problem.dim();
        if u0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: u0.len(),
            });
        }
        let engine = match opts.strategy {
            StepStrategy::Condensed => {
                Engine::Condensed(Box::new(CondensedSystem::build(problem, opts.cg)?))
            }
            StepStrategy::FullSpace => {
                let lipschitz = match opts.fista.lipschitz {
                    Some(l) => l,
                    None => estimate_lipschitz(&step_objective(problem, &u0, 0.0)),
                };
                Engine::FullSpace { lipschitz }
            }
        };
        Ok(Self {
            problem,
            opts: *opts,
            engine,
            step: 0,
            u_prev: u0.clone(),
            u: u0,
            w: vec![0.0; n],
            last: None,
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.problem.time.steps
    }

    pub fn displacement(&self) -> &[f64] {
        &self.u
    }

    /// Advances one step and returns the record of it.
    pub fn advance(&mut self) -> Result<StepRecord<'_>> {
        if self.is_done() {
            return Err(Error::Config("time march already reached T".into()));
        }
        let m = self.step + 1;
        let t = self.problem.time.time(m);
        let dt = self.problem.time.dt();
        let (w, outcome) = match &self.engine {
            Engine::Condensed(system) => {
                let warm = system.contact_part(&self.w);
                system
                    .step(self.problem, &self.u, t, &warm, &self.opts.fista)
                    .map_err(|e| e.at_step(m))?
            }
            Engine::FullSpace { lipschitz } => {
                let objective = step_objective(self.problem, &self.u, t);
                let opts = FistaOptions {
                    lipschitz: Some(*lipschitz),
                    ..self.opts.fista
                };
                let outcome =
                    fista_minimize(&objective, &self.w, &opts).map_err(|e| e.at_step(m))?;
                (outcome.w.clone(), outcome)
            }
        };
        std::mem::swap(&mut self.u_prev, &mut self.u);
        self.u.clear();
        self.u
            .extend(self.u_prev.iter().zip(&w).map(|(u, wi)| u + dt * wi));
        self.w = w;
        self.step = m;
        self.last = Some(StepDiagnostics {
            step: m,
            iterations: outcome.iterations,
            mapping_norm: outcome.mapping_norm,
            converged: outcome.converged,
            objective: outcome.objective,
        });
        Ok(StepRecord {
            step: m,
            time: t,
            u_prev: &self.u_prev,
            w: &self.w,
            u: &self.u,
            diagnostics: self.last.as_ref().expect("set above"),
        })
    }
}

/// Marches to `T`, calling `observer` after every step.
pub fn march_with(
    problem: &QuasistaticProblem,
    opts: &MarchOptions,
    mut observer: impl FnMut(&StepRecord<'_>) -> Result<()>,
) -> Result<(Vec<f64>, Vec<StepDiagnostics>)> {
    let mut marcher = Marcher::new(problem, opts)?;
    let mut diagnostics = Vec::with_capacity(problem.time.steps);
    while !marcher.is_done() {
        let record = marcher.advance()?;
        diagnostics.push(*record.diagnostics);
        observer(&record).map_err(|e| e.at_step(record.step))?;
    }
    Ok((marcher.u, diagnostics))
}

/// Marches to `T` and keeps every snapshot.
pub fn march(problem: &QuasistaticProblem, opts: &MarchOptions) -> Result<QuasistaticSolution> {
    let mut marcher = Marcher::new(problem, opts)?;
    let mut snapshots = vec![marcher.u.clone()];
    let mut diagnostics = Vec::with_capacity(problem.time.steps);
    while !marcher.is_done() {
        let record = marcher.advance()?;
        diagnostics.push(*record.diagnostics);
        snapshots.push(record.u.to_vec());
    }
    let times = (0..=problem.time.steps)
        .map(|m| problem.time.time(m))
        .collect();
    Ok(QuasistaticSolution {
        times,
        snapshots,
        diagnostics,
    })
}

/// Node coordinates and both displacement components, one node per line.
pub fn write_snapshot_csv(
    mesh: &StructuredMesh,
    dofs: &DofMap,
    u: &[f64],
    out: &mut impl Write,
) -> Result<()> {
    let full = dofs.expand(u);
    writeln!(out, "x1,x2,u1,u2")?;
    for node in 0..mesh.num_nodes() {
        let [x1, x2] = mesh.node_coords(node);
        writeln!(
            out,
            "{x1},{x2},{:e},{:e}",
            full[2 * node],
            full[2 * node + 1]
        )?;
    }
    Ok(())
}

pub fn write_snapshot_file(
    mesh: &StructuredMesh,
    dofs: &DofMap,
    u: &[f64],
    path: &Path,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot_csv(mesh, dofs, u, &mut f)?;
    f.flush()?;
    Ok(())
}

/// `step iterations mapping_norm converged` per line.
pub fn write_diagnostics(diagnostics: &[StepDiagnostics], out: &mut impl Write) -> Result<()> {
    for d in diagnostics {
        writeln!(
            out,
            "{} {} {:e} {}",
            d.step, d.iterations, d.mapping_norm, d.converged
        )?;
    }
    Ok(())
}
