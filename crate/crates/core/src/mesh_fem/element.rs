//! Bilinear rectangle element with 2×2 Gauss quadrature.
//!
//! Local nodes are counterclockwise from the lower-left corner, reference
//! coordinates `(-1,-1), (1,-1), (1,1), (-1,1)`. Local DOF `2a + α` is
//! component `α` of node `a`. Displacement gradients are stored as
//! `g[(α, j)] = ∂_j u^α`.

use nalgebra::Matrix2;

use crate::materials::ElasticTensor4;

const G: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Reference Gauss points, each with unit weight.
pub const GAUSS_2X2: [[f64; 2]; 4] = [[-G, -G], [G, -G], [G, G], [-G, G]];

const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

#[derive(Debug, Clone, Copy)]
pub struct GaussPoint {
    /// Reference coordinates.
    pub xi: [f64; 2],
    /// Physical coordinates.
    pub x: [f64; 2],
    /// Quadrature weight times the Jacobian determinant.
    pub weight: f64,
}

pub fn shape_values(xi: [f64; 2]) -> [f64; 4] {
    let mut n = [0.0; 4];
    for (a, c) in CORNERS.iter().enumerate() {
        n[a] = 0.25 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]);
    }
    n
}

/// Physical shape-function gradients on an `h[0] × h[1]` rectangle.
pub fn shape_gradients(xi: [f64; 2], h: [f64; 2]) -> [[f64; 2]; 4] {
    let mut g = [[0.0; 2]; 4];
    for (a, c) in CORNERS.iter().enumerate() {
        g[a][0] = 0.25 * c[0] * (1.0 + c[1] * xi[1]) * 2.0 / h[0];
        g[a][1] = 0.25 * c[1] * (1.0 + c[0] * xi[0]) * 2.0 / h[1];
    }
    g
}

/// Gauss points of the element with lower-left corner `origin`.
pub fn gauss_points(origin: [f64; 2], h: [f64; 2]) -> [GaussPoint; 4] {
    let det = 0.25 * h[0] * h[1];
    GAUSS_2X2.map(|xi| GaussPoint {
        xi,
        x: [
            origin[0] + 0.5 * h[0] * (1.0 + xi[0]),
            origin[1] + 0.5 * h[1] * (1.0 + xi[1]),
        ],
        weight: det,
    })
}

/// Element stiffness `K_ab = ∫ ∇φ_a : C : ∇φ_b`.
pub fn element_stiffness(h: [f64; 2], c: &ElasticTensor4) -> [[f64; 8]; 8] {
    let det = 0.25 * h[0] * h[1];
    let cc = c.components();
    let mut k = [[0.0; 8]; 8];
    for xi in GAUSS_2X2 {
        let grads = shape_gradients(xi, h);
        for a in 0..4 {
            for alpha in 0..2 {
                for b in 0..4 {
                    for beta in 0..2 {
                        let mut s = 0.0;
                        for j in 0..2 {
                            for l in 0..2 {
                                s += grads[a][j] * cc[alpha][j][beta][l] * grads[b][l];
                            }
                        }
                        k[2 * a + alpha][2 * b + beta] += s * det;
                    }
                }
            }
        }
    }
    k
}

/// Element vector `f_a = ∫ ∇φ_a : C : g` for a constant displacement gradient `g`.
pub fn element_load(h: [f64; 2], c: &ElasticTensor4, g: &Matrix2<f64>) -> [f64; 8] {
    let det = 0.25 * h[0] * h[1];
    let sigma = c.stress(g);
    let mut f = [0.0; 8];
    for xi in GAUSS_2X2 {
        let grads = shape_gradients(xi, h);
        for a in 0..4 {
            for alpha in 0..2 {
                f[2 * a + alpha] +=
                    (sigma[(alpha, 0)] * grads[a][0] + sigma[(alpha, 1)] * grads[a][1]) * det;
            }
        }
    }
    f
}
