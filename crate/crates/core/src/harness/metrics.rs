use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::cell_solver::{CorrectorSet, ElementField};
use crate::error::{Error, Result};
use crate::materials::cell_coordinates;
use crate::mesh_fem::{gauss_points, shape_values, StructuredMesh};

/// Squared L² norms of one time step, each summed element by element with
/// 2×2 Gauss quadrature.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepNorms {
    /// `‖∇u₀‖²`.
    pub grad_u0: f64,
    /// `‖∇(u_ε − u₀)‖²`.
    pub grad_diff: f64,
    /// `‖∇u_ε − ∇(u₀ + ε χ ∇u₀)‖²`.
    pub grad_expansion_diff: f64,
    /// `‖∇(u₀ + ε χ ∇u₀) − ∇u₀‖²`.
    pub corrector_term: f64,
    /// `‖u_ε − u₀‖²` and `‖u₀‖²`.
    pub l2_diff: f64,
    pub l2_u0: f64,
}

impl StepNorms {
    pub fn err1(&self) -> f64 {
        (self.grad_diff / self.grad_u0).sqrt()
    }

    pub fn err2(&self) -> f64 {
        (self.grad_expansion_diff / self.grad_u0).sqrt()
    }

    /// `‖∇(ε χ ∇u₀ terms)‖ / ‖∇u₀‖`.
    pub fn corrector_ratio(&self) -> f64 {
        (self.corrector_term / self.grad_u0).sqrt()
    }

    pub fn l2_relative(&self) -> f64 {
        (self.l2_diff / self.l2_u0).sqrt()
    }

    /// `Err₂ − Err₁ − corrector ratio`, non-positive up to rounding by the
    /// triangle inequality.
    pub fn triangle_excess(&self) -> f64 {
        self.err2() - self.err1() - self.corrector_ratio()
    }

    fn add(mut self, o: &Self) -> Self {
        self.grad_u0 += o.grad_u0;
        self.grad_diff += o.grad_diff;
        self.grad_expansion_diff += o.grad_expansion_diff;
        self.corrector_term += o.corrector_term;
        self.l2_diff += o.l2_diff;
        self.l2_u0 += o.l2_u0;
        self
    }
}

fn frob2(m: &Matrix2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Norms comparing the oscillating solution `u_eps` with the homogenized `u0`
/// (full nodal vectors on the same mesh). Without correctors the expansion
/// terms are left at zero.
pub fn step_norms(
    mesh: &StructuredMesh,
    u_eps: &[f64],
    u0: &[f64],
    correctors: Option<(&CorrectorSet, f64)>,
) -> StepNorms {
    let per_element: Vec<StepNorms> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let fe = ElementField::new(mesh, u_eps, e);
            let f0 = ElementField::new(mesh, u0, e);
            let nodes = mesh.element_nodes(e);
            let mut acc = StepNorms::default();
            for gp in gauss_points(mesh.element_origin(e), mesh.h()) {
                let ge = fe.gradient(gp.xi);
                let g0 = f0.gradient(gp.xi);
                acc.grad_u0 += gp.weight * frob2(&g0);
                acc.grad_diff += gp.weight * frob2(&(ge - g0));
                if let Some((set, eps)) = correctors {
                    let s = set.sample(cell_coordinates(eps, gp.x));
                    let gx = f0.expansion_gradient(&s, gp.xi, eps);
                    acc.grad_expansion_diff += gp.weight * frob2(&(ge - gx));
                    acc.corrector_term += gp.weight * frob2(&(gx - g0));
                }
                let phi = shape_values(gp.xi);
                for alpha in 0..2 {
                    let mut ve = 0.0;
                    let mut v0 = 0.0;
                    for (a, &n) in nodes.iter().enumerate() {
                        ve += phi[a] * u_eps[2 * n + alpha];
                        v0 += phi[a] * u0[2 * n + alpha];
                    }
                    acc.l2_diff += gp.weight * (ve - v0).powi(2);
                    acc.l2_u0 += gp.weight * v0 * v0;
                }
            }
            acc
        })
        .collect();
    // sequential reduction keeps the sum independent of the thread count
    per_element
        .iter()
        .fold(StepNorms::default(), |a, b| a.add(b))
}

/// `‖∇u‖_{L²}` of a full nodal vector.
pub fn gradient_norm(mesh: &StructuredMesh, u: &[f64]) -> f64 {
    let zero = vec![0.0; u.len()];
    step_norms(mesh, &zero, u, None).grad_u0.sqrt()
}

/// Running maxima over the time steps `m = 1..M`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorTracker {
    pub err1: f64,
    pub err2: f64,
    pub l2_relative: f64,
    /// Largest [`StepNorms::triangle_excess`] seen.
    pub triangle_excess: f64,
    pub steps: usize,
}

impl ErrorTracker {
    pub fn new() -> Self {
        Self {
            triangle_excess: f64::NEG_INFINITY,
            ..Self::default()
        }
    }

    pub fn record(&mut self, step: usize, norms: &StepNorms) -> Result<()> {
        if !(norms.grad_u0 > 0.0) {
            return Err(Error::ZeroReference { step });
        }
        self.err1 = self.err1.max(norms.err1());
        self.err2 = self.err2.max(norms.err2());
        self.l2_relative = self.l2_relative.max(norms.l2_relative());
        self.triangle_excess = self.triangle_excess.max(norms.triangle_excess());
        self.steps += 1;
        Ok(())
    }
}

/// `max_{m ≥ 1} ‖∇(u_ε − u₀)‖ / ‖∇u₀‖` over full nodal snapshots `u⁰ … uᴹ`.
pub fn compute_err1(mesh: &StructuredMesh, u_eps: &[Vec<f64>], u0: &[Vec<f64>]) -> Result<f64> {
    compute(mesh, u_eps, u0, None).map(|t| t.err1)
}

/// `max_{m ≥ 1} ‖∇u_ε − ∇(u₀ + ε χ(x/ε) ∇u₀)‖ / ‖∇u₀‖`.
pub fn compute_err2(
    mesh: &StructuredMesh,
    u_eps: &[Vec<f64>],
    u0: &[Vec<f64>],
    correctors: &CorrectorSet,
    eps: f64,
) -> Result<f64> {
    compute(mesh, u_eps, u0, Some((correctors, eps))).map(|t| t.err2)
}

fn compute(
    mesh: &StructuredMesh,
    u_eps: &[Vec<f64>],
    u0: &[Vec<f64>],
    correctors: Option<(&CorrectorSet, f64)>,
) -> Result<ErrorTracker> {
    if u_eps.len() != u0.len() {
        return Err(Error::DimensionMismatch {
            expected: u0.len(),
            actual: u_eps.len(),
        });
    }
    let mut tracker = ErrorTracker::new();
    for m in 1..u0.len() {
        tracker.record(m, &step_norms(mesh, &u_eps[m], &u0[m], correctors))?;
    }
    Ok(tracker)
}
