use crate::error::{Error, Result};
use crate::materials::ElasticTensor4;
use crate::mesh_fem::{
    assemble_body_load, assemble_stiffness, assemble_traction, contact_weights, CsrMatrix, DofMap,
    LinearOperator, StructuredMesh,
};

/// Load vector affine in time, `L(t) = base + t·rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLoad {
    pub base: Vec<f64>,
    pub rate: Vec<f64>,
}

impl AffineLoad {
    pub fn at(&self, t: f64) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.rate)
            .map(|(b, r)| b + t * r)
            .collect()
    }
}

/// Uniform time grid `tₘ = m·T/M`, `m = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        self.t_end * m as f64 / self.steps as f64
    }
}

/// Tangential contact DOF with its trapezoid weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactDof {
    /// Index into the reduced vector.
    pub dof: usize,
    pub node: usize,
    pub weight: f64,
}

/// Body force, Neumann traction and friction bound of the benchmark.
///
/// The traction on the left edge is `(trac_a (1.25 − x₂) t, trac_b t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrescaLoading {
    /// Body force (GN/m³).
    pub body_force: [f64; 2],
    /// Horizontal traction slope (GPa/s).
    pub trac_a: f64,
    /// Vertical traction rate (GPa/s).
    pub trac_b: f64,
    /// Friction bound `H_T` (GPa).
    pub friction_bound: f64,
}

impl Default for TrescaLoading {
    fn default() -> Self {
        Self {
            body_force: [0.0, -1.0e-4],
            trac_a: 0.08,
            trac_b: -0.01,
            friction_bound: 0.004,
        }
    }
}

impl TrescaLoading {
    pub fn traction(&self, x2: f64, t: f64) -> [f64; 2] {
        [self.trac_a * (1.25 - x2) * t, self.trac_b * t]
    }

    /// The same loading with every load scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            body_force: [c * self.body_force[0], c * self.body_force[1]],
            trac_a: c * self.trac_a,
            trac_b: c * self.trac_b,
            friction_bound: c * self.friction_bound,
        }
    }
}

/// Discrete quasistatic Tresca problem on the reduced DOFs.
#[derive(Debug, Clone)]
pub struct QuasistaticProblem {
    pub stiffness: CsrMatrix,
    pub load: AffineLoad,
    /// `H_T` (GPa).
    pub friction_bound: f64,
    pub contact: Vec<ContactDof>,
    pub time: TimeGrid,
}

impl QuasistaticProblem {
    pub fn new(
        stiffness: CsrMatrix,
        load: AffineLoad,
        friction_bound: f64,
        contact: Vec<ContactDof>,
        time: TimeGrid,
    ) -> Result<Self> {
        let n = stiffness.dim();
        for len in [load.base.len(), load.rate.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        if !(friction_bound >= 0.0) {
            return Err(Error::Config(format!(
                "friction bound must be non-negative, got {friction_bound}"
            )));
        }
        if time.steps == 0 || !(time.t_end > 0.0) {
            return Err(Error::Config(
                "time grid needs at least one step and T > 0".into(),
            ));
        }
        if let Some(c) = contact.iter().find(|c| c.dof >= n || !(c.weight >= 0.0)) {
            return Err(Error::Config(format!("invalid contact DOF {c:?}")));
        }
        Ok(Self {
            stiffness,
            load,
            friction_bound,
            contact,
            time,
        })
    }

    /// Assembles the benchmark problem on a mesh with a per-element coefficient.
    pub fn benchmark(
        mesh: &StructuredMesh,
        dofs: &DofMap,
        coeff: impl Fn(usize) -> ElasticTensor4,
        loading: &TrescaLoading,
        time: TimeGrid,
    ) -> Result<Self> {
        let stiffness = assemble_stiffness(mesh, coeff, dofs)?;
        let base = assemble_body_load(mesh, loading.body_force, dofs);
        // the traction is linear in t, so its load at t = 1 is the rate
        let rate = assemble_traction(mesh, |x2, t| loading.traction(x2, t), 1.0, dofs);
        let contact = contact_dofs(mesh, dofs);
        Self::new(
            stiffness,
            AffineLoad { base, rate },
            loading.friction_bound,
            contact,
            time,
        )
    }

    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn load_at(&self, t: f64) -> Vec<f64> {
        self.load.at(t)
    }

    /// `J(w) = H_T Σ ω_i |w_i|`.
    pub fn friction(&self, w: &[f64]) -> f64 {
        self.friction_bound
            * self
                .contact
                .iter()
                .map(|c| c.weight * w[c.dof].abs())
                .sum::<f64>()
    }

    /// `K u − L(t)`, the gradient of the smooth part at the new displacement.
    pub fn residual(&self, u: &[f64], t: f64) -> Vec<f64> {
        let mut r = self.stiffness.mul(u);
        for ((ri, b), rr) in r.iter_mut().zip(&self.load.base).zip(&self.load.rate) {
            *ri -= b + t * rr;
        }
        r
    }
}

/// Tangential DOFs of the contact nodes whose `u¹` is free.
pub fn contact_dofs(mesh: &StructuredMesh, dofs: &DofMap) -> Vec<ContactDof> {
    contact_weights(mesh)
        .into_iter()
        .filter_map(|cw| {
            dofs.reduced_index(cw.node, 0).map(|dof| ContactDof {
                dof,
                node: cw.node,
                weight: cw.weight,
            })
        })
        .collect()
}

/// `F(w) = (s/2) wᵀHw + cᵀw + Σ_k a_k |w_{i_k}|` with a symmetric positive
/// semidefinite `H`.
#[derive(Debug, Clone)]
pub struct CompositeQuadratic<'a, Op> {
    pub hessian: &'a Op,
    pub scale: f64,
    pub linear: Vec<f64>,
    /// `(index, weight)` pairs of the nonsmooth term.
    pub l1: Vec<(usize, f64)>,
}

impl<Op: LinearOperator> CompositeQuadratic<'_, Op> {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// `s·H·w`.
    pub fn hessian_apply(&self, w: &[f64], out: &mut [f64]) {
        self.hessian.apply(w, out);
        if self.scale != 1.0 {
            out.iter_mut().for_each(|v| *v *= self.scale);
        }
    }

    pub fn nonsmooth(&self, w: &[f64]) -> f64 {
        self.l1.iter().map(|&(i, a)| a * w[i].abs()).sum()
    }

    pub fn smooth_grad(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        self.hessian_apply(w, &mut g);
        g.iter_mut().zip(&self.linear).for_each(|(gi, c)| *gi += c);
        g
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let mut hw = vec![0.0; w.len()];
        self.hessian_apply(w, &mut hw);
        self.value_with(w, &hw)
    }

    /// Objective given a precomputed `s·H·w`.
    pub fn value_with(&self, w: &[f64], hw: &[f64]) -> f64 {
        w.iter()
            .zip(hw)
            .zip(&self.linear)
            .map(|((wi, hi), ci)| wi * (0.5 * hi + ci))
            .sum::<f64>()
            + self.nonsmooth(w)
    }
}

/// Per-step objective for the velocity `w`.
pub fn step_objective<'a>(
    problem: &'a QuasistaticProblem,
    u_prev: &[f64],
    t: f64,
) -> CompositeQuadratic<'a, CsrMatrix> {
    CompositeQuadratic {
        hessian: &problem.stiffness,
        scale: problem.time.dt(),
        linear: problem.residual(u_prev, t),
        l1: problem
            .contact
            .iter()
            .map(|c| (c.dof, problem.friction_bound * c.weight))
            .collect(),
    }
}

/// Soft-thresholding operator of the lumped friction functional.
#[derive(Debug, Clone, PartialEq)]
pub struct FrictionProx {
    /// `(index, τ_i)` with `τ_i = step · H_T ω_i`.
    pub thresholds: Vec<(usize, f64)>,
}

impl FrictionProx {
    pub fn new(l1: &[(usize, f64)], step: f64) -> Self {
        Self {
            thresholds: l1.iter().map(|&(i, a)| (i, step * a)).collect(),
        }
    }

    pub fn apply_in_place(&self, z: &mut [f64]) {
        for &(i, tau) in &self.thresholds {
            z[i] = z[i].signum() * (z[i].abs() - tau).max(0.0);
        }
    }
}

/// `sign(z_i)·max(|z_i| − τ_i, 0)` on contact DOFs, identity elsewhere.
pub fn friction_prox(z: &[f64], prox: &FrictionProx) -> Vec<f64> {
    let mut out = z.to_vec();
    prox.apply_in_place(&mut out);
    out
}

/// Sampled variational-inequality residual at step time `t`:
/// `(K u − L(t))·(v − w) + J(v) − J(w)` and its scale `‖L(t)‖·‖v − w‖`.
pub fn vi_residual(
    problem: &QuasistaticProblem,
    u: &[f64],
    w: &[f64],
    t: f64,
    v: &[f64],
) -> (f64, f64) {
    let r = problem.residual(u, t);
    let l = problem.load_at(t);
    let mut pairing = 0.0;
    let mut dist2 = 0.0;
    for i in 0..v.len() {
        let d = v[i] - w[i];
        pairing += r[i] * d;
        dist2 += d * d;
    }
    let lnorm = l.iter().map(|x| x * x).sum::<f64>().sqrt();
    (
        pairing + problem.friction(v) - problem.friction(w),
        lnorm * dist2.sqrt(),
    )
}

/// Outcome of the stick/slip optimality check at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StickSlipReport {
    pub stick: usize,
    pub slip: usize,
    /// Largest violation: for stick nodes `|g_i| − H_T ω_i` (when positive),
    /// for slip nodes `||g_i| − H_T ω_i|` or a sign mismatch.
    pub worst_defect: f64,
}

impl StickSlipReport {
    pub fn holds(&self, delta: f64) -> bool {
        self.worst_defect <= delta
    }
}

/// Checks that every contact DOF either sticks (`w_i = 0`, `|g_i| ≤ H_T ω_i`)
/// or slips at the friction bound against the velocity.
pub fn stick_slip_check(
    problem: &QuasistaticProblem,
    u: &[f64],
    w: &[f64],
    t: f64,
) -> StickSlipReport {
    let g = problem.residual(u, t);
    let mut report = StickSlipReport {
        stick: 0,
        slip: 0,
        worst_defect: 0.0,
    };
    for c in &problem.contact {
        let bound = problem.friction_bound * c.weight;
        let gi = g[c.dof];
        let defect = if w[c.dof] == 0.0 {
            report.stick += 1;
            (gi.abs() - bound).max(0.0)
        } else {
            report.slip += 1;
            // slip opposes the traction: g_i = −H_T ω_i sign(w_i)
            (gi + bound * w[c.dof].signum()).abs()
        };
        report.worst_defect = report.worst_defect.max(defect);
    }
    report
}
