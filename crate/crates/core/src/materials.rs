//! Elasticity tensors and piecewise-constant unit-cell coefficients.
//!
//! Index convention: `c[i][j][k][l]` is the stiffness relating the strain
//! component `ε_kl` to the stress component `σ_ij`, so that
//! `σ_ij = c_ijkl ε_kl`. With this convention the minor symmetries read
//! `c_ijkl = c_jikl = c_ijlk` and the major symmetry `c_ijkl = c_klij`.
//!
//! Quadratic forms are evaluated in Mandel notation,
//! `x = (ξ_11, ξ_22, √2 ξ_12)`, for which `ξ:C:ξ = xᵀ M x` and `|x| = |ξ|`,
//! so the coercivity constant is the smallest eigenvalue of `M`.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};

use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Relative tolerance used when validating tensor symmetries.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Rank-4 plane elasticity tensor with minor and major symmetries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticTensor4 {
    c: [[[[f64; 2]; 2]; 2]; 2],
    coercivity: f64,
}

impl ElasticTensor4 {
    /// Builds a tensor from its 16 components, validating symmetries and
    /// coercivity.
    pub fn from_components(c: [[[[f64; 2]; 2]; 2]; 2]) -> Result<Self> {
        let defect = symmetry_defect(&c);
        if !(defect <= SYMMETRY_TOL) {
            return Err(Error::NotSymmetric { defect });
        }
        let mandel = mandel_of(&c);
        let min_eigenvalue = min_symmetric_eigenvalue(&mandel);
        if !(min_eigenvalue > 0.0) {
            return Err(Error::NotCoercive { min_eigenvalue });
        }
        Ok(Self {
            c,
            coercivity: min_eigenvalue,
        })
    }

    /// Builds a tensor from a Voigt matrix acting on `(ε_11, ε_22, γ_12)`
    /// with `γ_12 = 2 ε_12`.
    pub fn from_voigt(d: &Matrix3<f64>) -> Result<Self> {
        let mut c = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        c[i][j][k][l] = d[(voigt_index(i, j), voigt_index(k, l))];
                    }
                }
            }
        }
        Self::from_components(c)
    }

    /// Builds a tensor from a Mandel matrix.
    pub fn from_mandel(m: &Matrix3<f64>) -> Result<Self> {
        let mut d = *m;
        for a in 0..2 {
            d[(a, 2)] /= SQRT2;
            d[(2, a)] /= SQRT2;
        }
        d[(2, 2)] /= 2.0;
        Self::from_voigt(&d)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c[i][j][k][l]
    }

    pub fn components(&self) -> &[[[[f64; 2]; 2]; 2]; 2] {
        &self.c
    }

    /// Coercivity constant `m`: `ξ:C:ξ ≥ m|ξ|²` for all symmetric `ξ`.
    pub fn coercivity(&self) -> f64 {
        self.coercivity
    }

    /// Voigt matrix acting on `(ε_11, ε_22, γ_12)`.
    pub fn voigt(&self) -> Matrix3<f64> {
        let mut d = Matrix3::zeros();
        let pairs = [(0, 0), (1, 1), (0, 1)];
        for (a, &(i, j)) in pairs.iter().enumerate() {
            for (b, &(k, l)) in pairs.iter().enumerate() {
                d[(a, b)] = self.c[i][j][k][l];
            }
        }
        d
    }

    pub fn mandel(&self) -> Matrix3<f64> {
        mandel_of(&self.c)
    }

    /// Largest Mandel eigenvalue, the upper bound `M` of `ξ:C:ξ ≤ M|ξ|²`.
    pub fn max_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.mandel()).eigenvalues.max()
    }

    /// `ξ:C:ξ` for a 2×2 matrix `ξ`.
    pub fn quadratic_form(&self, xi: &Matrix2<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        acc += xi[(i, j)] * self.c[i][j][k][l] * xi[(k, l)];
                    }
                }
            }
        }
        acc
    }

    /// Stress `σ = C:g` for a (not necessarily symmetric) displacement gradient.
    pub fn stress(&self, grad: &Matrix2<f64>) -> Matrix2<f64> {
        Matrix2::from_fn(|i, j| {
            let mut s = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    s += self.c[i][j][k][l] * grad[(k, l)];
                }
            }
            s
        })
    }

    /// Largest relative violation of the minor and major symmetries.
    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.c)
    }

    pub fn max_abs(&self) -> f64 {
        self.c
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn voigt_index(i: usize, j: usize) -> usize {
    if i == j {
        i
    } else {
        2
    }
}

fn mandel_of(c: &[[[[f64; 2]; 2]; 2]; 2]) -> Matrix3<f64> {
    let pairs = [(0, 0, 1.0), (1, 1, 1.0), (0, 1, SQRT2)];
    let mut m = Matrix3::zeros();
    for (a, &(i, j, wa)) in pairs.iter().enumerate() {
        for (b, &(k, l, wb)) in pairs.iter().enumerate() {
            m[(a, b)] = wa * wb * c[i][j][k][l];
        }
    }
    m
}

fn min_symmetric_eigenvalue(m: &Matrix3<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

fn symmetry_defect(c: &[[[[f64; 2]; 2]; 2]; 2]) -> f64 {
    let scale = c
        .iter()
        .flatten()
        .flatten()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let v = c[i][j][k][l];
                    worst = worst
                        .max((v - c[j][i][k][l]).abs())
                        .max((v - c[i][j][l][k]).abs())
                        .max((v - c[k][l][i][j]).abs());
                }
            }
        }
    }
    worst / scale
}

/// Isotropic linear elastic phase described by Young's modulus and Poisson ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicPhase {
    /// Young's modulus (GPa).
    pub e: f64,
    /// Poisson ratio.
    pub nu: f64,
}

impl IsotropicPhase {
    pub fn new(e: f64, nu: f64) -> Result<Self> {
        let phase = Self { e, nu };
        phase.validate()?;
        Ok(phase)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason| {
            Err(Error::InvalidPhase {
                e: self.e,
                nu: self.nu,
                reason,
            })
        };
        if !(self.e > 0.0) || !self.e.is_finite() {
            return fail("Young's modulus must be positive and finite");
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return fail("Poisson ratio must lie in (-1, 0.5)");
        }
        Ok(())
    }

    /// Plane-stress `λ = Eν / ((1+ν)(1−ν))`.
    pub fn lambda(&self) -> f64 {
        self.e * self.nu / ((1.0 + self.nu) * (1.0 - self.nu))
    }

    /// Shear modulus `μ = E / (2(1+ν))`.
    pub fn mu(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }
}

/// Plane-stress isotropic stiffness
/// `c_ijkl = λ δ_ij δ_kl + μ (δ_ik δ_jl + δ_il δ_jk)`.
pub fn isotropic_plane_stress(phase: &IsotropicPhase) -> Result<ElasticTensor4> {
    phase.validate()?;
    let (lambda, mu) = (phase.lambda(), phase.mu());
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut c = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    c[i][j][k][l] = lambda * delta(i, j) * delta(k, l)
                        + mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
                }
            }
        }
    }
    ElasticTensor4::from_components(c)
}

/// Material layout of the unit cell `[0,1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellLayout {
    /// Cross inclusion inset from the cell boundary:
    /// `[1/8,7/8)×[3/8,5/8) ∪ [3/8,5/8)×[1/8,7/8)`.
    CrossInset,
    /// Cross inclusion spanning the whole cell:
    /// `[0,1)×[3/8,5/8) ∪ [3/8,5/8)×[0,1)`.
    CrossFull,
    /// Matrix phase everywhere.
    Homogeneous,
    /// Horizontal layer `y₂ ∈ [3/8,5/8)` of the inclusion phase.
    Layered,
}

impl CellLayout {
    pub fn name(&self) -> &'static str {
        match self {
            CellLayout::CrossInset => "cross-inset",
            CellLayout::CrossFull => "cross-full",
            CellLayout::Homogeneous => "homogeneous",
            CellLayout::Layered => "layered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cross-inset" | "crossinset" | "a" => Some(CellLayout::CrossInset),
            "cross-full" | "crossfull" | "b" => Some(CellLayout::CrossFull),
            "homogeneous" => Some(CellLayout::Homogeneous),
            "layered" => Some(CellLayout::Layered),
            _ => None,
        }
    }

    /// Whether `y` (in cell coordinates) belongs to the inclusion phase.
    /// Intervals are half-open so every point gets exactly one phase.
    pub fn is_inclusion(&self, y: [f64; 2]) -> bool {
        let within = |v: f64, a: f64, b: f64| v >= a && v < b;
        let band = |v: f64| within(v, 0.375, 0.625);
        match self {
            CellLayout::CrossInset => {
                let arm = |v: f64| within(v, 0.125, 0.875);
                (arm(y[0]) && band(y[1])) || (band(y[0]) && arm(y[1]))
            }
            CellLayout::CrossFull => band(y[0]) || band(y[1]),
            CellLayout::Homogeneous => false,
            CellLayout::Layered => band(y[1]),
        }
    }
}

/// Two-phase unit-cell material description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConfig {
    pub layout: CellLayout,
    pub phase0: IsotropicPhase,
    pub phase1: IsotropicPhase,
    tensors: [ElasticTensor4; 2],
}

impl CellConfig {
    pub fn new(layout: CellLayout, phase0: IsotropicPhase, phase1: IsotropicPhase) -> Result<Self> {
        let tensors = [
            isotropic_plane_stress(&phase0)?,
            isotropic_plane_stress(&phase1)?,
        ];
        Ok(Self {
            layout,
            phase0,
            phase1,
            tensors,
        })
    }

    /// The two-phase composite used throughout the numerical experiments:
    /// `(E₀, ν₀) = (77.2 GPa, 0.33)`, `(E₁, ν₁) = (117.0 GPa, 0.43)`.
    pub fn reference(layout: CellLayout) -> Self {
        Self::new(
            layout,
            IsotropicPhase { e: 77.2, nu: 0.33 },
            IsotropicPhase { e: 117.0, nu: 0.43 },
        )
        .expect("reference phases are valid")
    }

    pub fn phase_tensor(&self, phase: usize) -> &ElasticTensor4 {
        &self.tensors[phase]
    }

    /// Coefficient at a point of the unit cell.
    pub fn coefficient_at(&self, y: [f64; 2]) -> &ElasticTensor4 {
        if self.layout.is_inclusion(y) {
            &self.tensors[1]
        } else {
            &self.tensors[0]
        }
    }

    /// Coefficient of the ε-periodic medium at a physical point, `A(x/ε)`.
    pub fn epsilon_coefficient_at(&self, eps: f64, x: [f64; 2]) -> &ElasticTensor4 {
        self.coefficient_at(cell_coordinates(eps, x))
    }
}

/// Componentwise fractional part of `x/ε`.
pub fn cell_coordinates(eps: f64, x: [f64; 2]) -> [f64; 2] {
    let frac = |v: f64| {
        let f = (v / eps).rem_euclid(1.0);
        // rem_euclid may round up to exactly 1.0 for tiny negative inputs
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    };
    [frac(x[0]), frac(x[1])]
}
