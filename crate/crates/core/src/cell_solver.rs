//! Periodic cell problems, correctors and the effective tensor.
//!
//! The corrector `χ_k^γ` is the periodic, zero-mean response of the cell to
//! the unit macroscopic displacement gradient `∂_k u^γ = 1`:
//!
//! ```text
//! ∫_Y ∇v : A : ∇χ_k^γ dy = −∫_Y ∇v : A : (e_γ ⊗ e_k) dy    for all periodic v
//! ```
//!
//! and the effective tensor averages the corrected flux,
//! `Â_{αiγk} = ⨍_Y A_{αiγk} + A_{αiβj} ∂_j χ_k^{βγ} dy`, where `χ_k^{βγ}`
//! denotes component `β` of `χ_k^γ`.

use std::io::Write;

use nalgebra::{Matrix2, Matrix3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::materials::{cell_coordinates, CellConfig, ElasticTensor4};
use crate::mesh_fem::{
    assemble_generic, cg_solve, element_load, gauss_points, shape_gradients, shape_values,
    CgOptions, StructuredMesh, GAUSS_2X2,
};

/// Uniform `n × n` Q1 mesh of the unit cell with periodic node identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicCellMesh {
    n: usize,
}

impl PeriodicCellMesh {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMesh(format!(
                "cell resolution must be at least 2, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Independent periodic nodes, `n²`.
    pub fn num_nodes(&self) -> usize {
        self.n * self.n
    }

    pub fn num_elements(&self) -> usize {
        self.n * self.n
    }

    /// Node id of lattice point `(i, j)`, wrapping `n ≡ 0`.
    #[inline]
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        (j % self.n) * self.n + (i % self.n)
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let h = self.h();
        [(node % self.n) as f64 * h, (node / self.n) as f64 * h]
    }

    #[inline]
    pub fn element_nodes(&self, elem: usize) -> [usize; 4] {
        let (i, j) = (elem % self.n, elem / self.n);
        [
            self.node_id(i, j),
            self.node_id(i + 1, j),
            self.node_id(i + 1, j + 1),
            self.node_id(i, j + 1),
        ]
    }

    pub fn element_origin(&self, elem: usize) -> [f64; 2] {
        let h = self.h();
        [(elem % self.n) as f64 * h, (elem / self.n) as f64 * h]
    }

    pub fn element_centroid(&self, elem: usize) -> [f64; 2] {
        let o = self.element_origin(elem);
        let h = self.h();
        [o[0] + 0.5 * h, o[1] + 0.5 * h]
    }

    /// Element containing `y ∈ [0,1)²` and the reference coordinates of `y` in it.
    pub fn locate(&self, y: [f64; 2]) -> (usize, [f64; 2]) {
        let n = self.n as f64;
        let mut idx = [0usize; 2];
        let mut xi = [0.0; 2];
        for d in 0..2 {
            let s = y[d] * n;
            let i = (s.floor().max(0.0) as usize).min(self.n - 1);
            idx[d] = i;
            xi[d] = 2.0 * (s - i as f64) - 1.0;
        }
        (idx[1] * self.n + idx[0], xi)
    }
}

fn project_zero_mean(v: &mut [f64]) {
    let n = v.len() / 2;
    for comp in 0..2 {
        let mean = v.iter().skip(comp).step_by(2).sum::<f64>() / n as f64;
        v.iter_mut().skip(comp).step_by(2).for_each(|x| *x -= mean);
    }
}

/// The four correctors `χ_k^γ`, `k, γ ∈ {0, 1}`, as nodal fields on the
/// periodic cell mesh (interleaved components, `2n²` values each).
#[derive(Debug, Clone)]
pub struct CorrectorSet {
    mesh: PeriodicCellMesh,
    fields: [[Vec<f64>; 2]; 2],
    /// CG iterations per cell problem, `[k][γ]`.
    pub iterations: [[usize; 2]; 2],
    /// Largest corrector-gradient magnitude over all Gauss points.
    pub max_gradient: f64,
}

impl CorrectorSet {
    /// All-zero correctors, the exact answer for a constant coefficient.
    pub fn zeros(n: usize) -> Result<Self> {
        let mesh = PeriodicCellMesh::new(n)?;
        let z = vec![0.0; 2 * mesh.num_nodes()];
        Ok(Self {
            mesh,
            fields: [[z.clone(), z.clone()], [z.clone(), z]],
            iterations: [[0; 2]; 2],
            max_gradient: 0.0,
        })
    }

    pub fn mesh(&self) -> &PeriodicCellMesh {
        &self.mesh
    }

    /// Nodal field of `χ_k^γ`.
    pub fn field(&self, k: usize, gamma: usize) -> &[f64] {
        &self.fields[k][gamma]
    }

    /// `χ_k^γ(y)` by bilinear interpolation.
    pub fn value_at(&self, k: usize, gamma: usize, y: [f64; 2]) -> [f64; 2] {
        let (e, xi) = self.mesh.locate(y);
        let nodes = self.mesh.element_nodes(e);
        let phi = shape_values(xi);
        let f = &self.fields[k][gamma];
        let mut out = [0.0; 2];
        for (a, &node) in nodes.iter().enumerate() {
            out[0] += phi[a] * f[2 * node];
            out[1] += phi[a] * f[2 * node + 1];
        }
        out
    }

    /// `∇_y χ_k^γ(y)` as `g[(β, j)] = ∂_j χ_k^{βγ}`, taken from the cell
    /// element containing `y`.
    pub fn gradient_at(&self, k: usize, gamma: usize, y: [f64; 2]) -> Matrix2<f64> {
        let (e, xi) = self.mesh.locate(y);
        element_gradient(&self.mesh, &self.fields[k][gamma], e, xi)
    }

    /// Values and gradients of all four correctors at `y`.
    pub fn sample(&self, y: [f64; 2]) -> CorrectorSample {
        let (e, xi) = self.mesh.locate(y);
        let nodes = self.mesh.element_nodes(e);
        let phi = shape_values(xi);
        let grads = shape_gradients(xi, [self.mesh.h(); 2]);
        let mut s = CorrectorSample {
            values: [[[0.0; 2]; 2]; 2],
            gradients: [[Matrix2::zeros(); 2]; 2],
        };
        for k in 0..2 {
            for gamma in 0..2 {
                let f = &self.fields[k][gamma];
                for (a, &node) in nodes.iter().enumerate() {
                    for beta in 0..2 {
                        let v = f[2 * node + beta];
                        s.values[k][gamma][beta] += phi[a] * v;
                        s.gradients[k][gamma][(beta, 0)] += grads[a][0] * v;
                        s.gradients[k][gamma][(beta, 1)] += grads[a][1] * v;
                    }
                }
            }
        }
        s
    }

    /// `∫_Y χ_k^γ dy` per component.
    pub fn integral(&self, k: usize, gamma: usize) -> [f64; 2] {
        // every periodic Q1 basis function integrates to h²
        let f = &self.fields[k][gamma];
        let w = self.mesh.h() * self.mesh.h();
        let s0: f64 = f.iter().step_by(2).sum();
        let s1: f64 = f.iter().skip(1).step_by(2).sum();
        [s0 * w, s1 * w]
    }

    /// `‖χ_k^{βγ}‖_{L²(Y)}` per component, 2×2 Gauss.
    pub fn l2_norm(&self, k: usize, gamma: usize) -> [f64; 2] {
        let f = &self.fields[k][gamma];
        let h = self.mesh.h();
        let mut acc = [0.0; 2];
        for e in 0..self.mesh.num_elements() {
            let nodes = self.mesh.element_nodes(e);
            for gp in gauss_points(self.mesh.element_origin(e), [h, h]) {
                let phi = shape_values(gp.xi);
                for beta in 0..2 {
                    let v: f64 = nodes
                        .iter()
                        .enumerate()
                        .map(|(a, &n)| phi[a] * f[2 * n + beta])
                        .sum();
                    acc[beta] += v * v * gp.weight;
                }
            }
        }
        [acc[0].sqrt(), acc[1].sqrt()]
    }

    /// Nodal table `y1,y2,chi{k}{γ}_{β}` for plotting.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        write!(out, "y1,y2")?;
        for k in 1..=2 {
            for gamma in 1..=2 {
                for beta in 1..=2 {
                    write!(out, ",chi{k}{gamma}_{beta}")?;
                }
            }
        }
        writeln!(out)?;
        for node in 0..self.mesh.num_nodes() {
            let y = self.mesh.node_coords(node);
            write!(out, "{:.8},{:.8}", y[0], y[1])?;
            for k in 0..2 {
                for gamma in 0..2 {
                    let f = &self.fields[k][gamma];
                    write!(out, ",{:.12e},{:.12e}", f[2 * node], f[2 * node + 1])?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Corrector values and gradients at one cell point, indexed `[k][γ]`.
#[derive(Debug, Clone, Copy)]
pub struct CorrectorSample {
    /// `values[k][γ][β] = χ_k^{βγ}`.
    pub values: [[[f64; 2]; 2]; 2],
    /// `gradients[k][γ][(β, j)] = ∂_j χ_k^{βγ}`.
    pub gradients: [[Matrix2<f64>; 2]; 2],
}

fn element_gradient(
    mesh: &PeriodicCellMesh,
    field: &[f64],
    elem: usize,
    xi: [f64; 2],
) -> Matrix2<f64> {
    let nodes = mesh.element_nodes(elem);
    let grads = shape_gradients(xi, [mesh.h(); 2]);
    let mut g = Matrix2::zeros();
    for (a, &node) in nodes.iter().enumerate() {
        for beta in 0..2 {
            g[(beta, 0)] += grads[a][0] * field[2 * node + beta];
            g[(beta, 1)] += grads[a][1] * field[2 * node + beta];
        }
    }
    g
}

/// Unit macroscopic displacement gradient `∂_k u^γ = 1`.
fn unit_gradient(k: usize, gamma: usize) -> Matrix2<f64> {
    let mut g = Matrix2::zeros();
    g[(gamma, k)] = 1.0;
    g
}

/// Solves the four periodic cell problems on an `n × n` cell mesh.
///
/// The constant nullspace is deflated inside CG and projected out again at
/// the end, so every corrector has zero mean.
pub fn solve_correctors(config: &CellConfig, n: usize) -> Result<CorrectorSet> {
    let mesh = PeriodicCellMesh::new(n)?;
    let h = [mesh.h(); 2];
    let coeff = |e: usize| *config.coefficient_at(mesh.element_centroid(e));
    let ndof = 2 * mesh.num_nodes();
    let k = assemble_generic(
        ndof,
        mesh.num_elements(),
        h,
        |e| mesh.element_nodes(e),
        coeff,
        |node, comp| Some(2 * node + comp),
    )?;

    let opts = CgOptions::default();
    let solve_one = |(kk, gamma): (usize, usize)| -> Result<(Vec<f64>, usize)> {
        let g = unit_gradient(kk, gamma);
        let mut b = vec![0.0; ndof];
        for e in 0..mesh.num_elements() {
            let fe = element_load(h, &coeff(e), &g);
            for (a, &node) in mesh.element_nodes(e).iter().enumerate() {
                b[2 * node] -= fe[2 * a];
                b[2 * node + 1] -= fe[2 * a + 1];
            }
        }
        let sol = cg_solve(&k, &b, &opts, Some(&project_zero_mean))?;
        let mut x = sol.x;
        project_zero_mean(&mut x);
        Ok((x, sol.iterations))
    };

    let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let solved: Vec<(Vec<f64>, usize)> = pairs
        .par_iter()
        .map(|&p| solve_one(p))
        .collect::<Result<_>>()?;
    let mut it = solved.into_iter();
    let mut next = || it.next().expect("four cell problems");
    let (f00, i00) = next();
    let (f01, i01) = next();
    let (f10, i10) = next();
    let (f11, i11) = next();
    let mut set = CorrectorSet {
        mesh,
        fields: [[f00, f01], [f10, f11]],
        iterations: [[i00, i01], [i10, i11]],
        max_gradient: 0.0,
    };
    set.max_gradient = max_gradient(&set);
    Ok(set)
}

fn max_gradient(set: &CorrectorSet) -> f64 {
    let mut worst = 0.0_f64;
    for e in 0..set.mesh.num_elements() {
        for xi in GAUSS_2X2 {
            for k in 0..2 {
                for gamma in 0..2 {
                    worst =
                        worst.max(element_gradient(&set.mesh, &set.fields[k][gamma], e, xi).norm());
                }
            }
        }
    }
    worst
}

/// Homogenized tensor together with the data it was computed from.
#[derive(Debug, Clone)]
pub struct EffectiveTensor {
    pub tensor: ElasticTensor4,
    pub resolution: usize,
    pub config: CellConfig,
    /// Largest corrector-gradient magnitude; recorded, not certified.
    pub max_corrector_gradient: f64,
}

/// Cell average `Â_{αiγk} = ⨍ A_{αiγk} + A_{αiβj} ∂_j χ_k^{βγ}` with 2×2 Gauss.
pub fn effective_tensor(config: &CellConfig, correctors: &CorrectorSet) -> Result<EffectiveTensor> {
    let mesh = correctors.mesh;
    let h = mesh.h();
    let mut c_hat = [[[[0.0; 2]; 2]; 2]; 2];
    for e in 0..mesh.num_elements() {
        let a = config.coefficient_at(mesh.element_centroid(e)).components();
        for gp in gauss_points(mesh.element_origin(e), [h, h]) {
            for k in 0..2 {
                for gamma in 0..2 {
                    let grad = element_gradient(&mesh, &correctors.fields[k][gamma], e, gp.xi)
                        + unit_gradient(k, gamma);
                    for alpha in 0..2 {
                        for i in 0..2 {
                            let mut s = 0.0;
                            for beta in 0..2 {
                                for j in 0..2 {
                                    s += a[alpha][i][beta][j] * grad[(beta, j)];
                                }
                            }
                            c_hat[alpha][i][gamma][k] += s * gp.weight;
                        }
                    }
                }
            }
        }
    }
    let tensor = ElasticTensor4::from_components(c_hat)?;
    Ok(EffectiveTensor {
        tensor,
        resolution: mesh.resolution(),
        config: *config,
        max_corrector_gradient: correctors.max_gradient,
    })
}

/// Arithmetic cell mean `⨍ A` (upper bound of `Â`), sampled like the assembly.
pub fn arithmetic_mean_tensor(config: &CellConfig, n: usize) -> Result<ElasticTensor4> {
    let mesh = PeriodicCellMesh::new(n)?;
    let mut m = Matrix3::zeros();
    for e in 0..mesh.num_elements() {
        m += config.coefficient_at(mesh.element_centroid(e)).mandel();
    }
    ElasticTensor4::from_mandel(&(m / mesh.num_elements() as f64))
}

/// Harmonic cell mean `(⨍ A⁻¹)⁻¹` (lower bound of `Â`).
pub fn harmonic_mean_tensor(config: &CellConfig, n: usize) -> Result<ElasticTensor4> {
    let mesh = PeriodicCellMesh::new(n)?;
    let mut m = Matrix3::zeros();
    for e in 0..mesh.num_elements() {
        let inv = config
            .coefficient_at(mesh.element_centroid(e))
            .mandel()
            .try_inverse()
            .ok_or(Error::NotCoercive {
                min_eigenvalue: 0.0,
            })?;
        m += inv;
    }
    let mean = m / mesh.num_elements() as f64;
    let inv = mean.try_inverse().ok_or(Error::NotCoercive {
        min_eigenvalue: 0.0,
    })?;
    ElasticTensor4::from_mandel(&((inv + inv.transpose()) * 0.5))
}

/// Writes `i,j,k,l,value` rows of a tensor (1-based indices).
pub fn write_tensor_csv(tensor: &ElasticTensor4, mut out: impl Write) -> Result<()> {
    writeln!(out, "i,j,k,l,value")?;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    writeln!(
                        out,
                        "{},{},{},{},{:.12e}",
                        i + 1,
                        j + 1,
                        k + 1,
                        l + 1,
                        tensor.get(i, j, k, l)
                    )?;
                }
            }
        }
    }
    Ok(())
}

/// Gradient of the first-order expansion `u₀ + ε χ_j^{β}(x/ε) ∂_j u₀^β` at
/// every macro Gauss point, `[element][gauss point]`, as `g[(α, i)]`.
///
/// `u0` is a full nodal vector (two interleaved components per node).
pub fn expansion_gradient(
    correctors: &CorrectorSet,
    mesh: &StructuredMesh,
    u0: &[f64],
    eps: f64,
) -> Vec<[Matrix2<f64>; 4]> {
    (0..mesh.num_elements())
        .map(|e| {
            let local = ElementField::new(mesh, u0, e);
            let gps = gauss_points(mesh.element_origin(e), mesh.h());
            gps.map(|gp| {
                let s = correctors.sample(cell_coordinates(eps, gp.x));
                local.expansion_gradient(&s, gp.xi, eps)
            })
        })
        .collect()
}

/// Nodal values of a Q1 displacement on one macro element.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ElementField {
    values: [[f64; 2]; 4],
    h: [f64; 2],
}

impl ElementField {
    pub(crate) fn new(mesh: &StructuredMesh, u: &[f64], elem: usize) -> Self {
        let nodes = mesh.element_nodes(elem);
        Self {
            values: nodes.map(|n| [u[2 * n], u[2 * n + 1]]),
            h: mesh.h(),
        }
    }

    /// `g[(α, j)] = ∂_j u^α` at reference point `xi`.
    pub(crate) fn gradient(&self, xi: [f64; 2]) -> Matrix2<f64> {
        let grads = shape_gradients(xi, self.h);
        let mut g = Matrix2::zeros();
        for a in 0..4 {
            for alpha in 0..2 {
                g[(alpha, 0)] += grads[a][0] * self.values[a][alpha];
                g[(alpha, 1)] += grads[a][1] * self.values[a][alpha];
            }
        }
        g
    }

    /// Mixed derivative `∂₁∂₂ u^α`, constant on a bilinear element.
    pub(crate) fn mixed_derivative(&self) -> [f64; 2] {
        let v = &self.values;
        let s = 1.0 / (self.h[0] * self.h[1]);
        [0, 1].map(|alpha| (v[0][alpha] - v[1][alpha] + v[2][alpha] - v[3][alpha]) * s)
    }

    /// `∂_i u^α + ∂_i χ_j^{αβ} ∂_j u^β + ε χ_j^{αβ} ∂_i∂_j u^β`.
    pub(crate) fn expansion_gradient(
        &self,
        s: &CorrectorSample,
        xi: [f64; 2],
        eps: f64,
    ) -> Matrix2<f64> {
        let g = self.gradient(xi);
        let mixed = self.mixed_derivative();
        let mut out = g;
        for j in 0..2 {
            for beta in 0..2 {
                let du = g[(beta, j)];
                out += s.gradients[j][beta] * du;
                for i in 0..2 {
                    if i != j {
                        for alpha in 0..2 {
                            out[(alpha, i)] += eps * s.values[j][beta][alpha] * mixed[beta];
                        }
                    }
                }
            }
        }
        out
    }
}
