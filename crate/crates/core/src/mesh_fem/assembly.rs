use super::dofs::DofMap;
use super::element::{element_stiffness, gauss_points, shape_values};
use super::mesh::StructuredMesh;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::materials::ElasticTensor4;

/// Assembles a reduced stiffness matrix over arbitrary element connectivity.
///
/// `dof_of(node, comp)` returns the reduced row of a nodal DOF or `None` for
/// an eliminated DOF. Nodes may be shared across the domain boundary
/// (periodic identification) since contributions are summed by row.
pub fn assemble_generic(
    n_rows: usize,
    n_elements: usize,
    h: [f64; 2],
    element_nodes: impl Fn(usize) -> [usize; 4],
    coeff: impl Fn(usize) -> ElasticTensor4,
    dof_of: impl Fn(usize, usize) -> Option<usize>,
) -> Result<CsrMatrix> {
    let local_dofs = |e: usize| {
        let nodes = element_nodes(e);
        let mut out = [None; 8];
        for (a, &node) in nodes.iter().enumerate() {
            for comp in 0..2 {
                out[2 * a + comp] = dof_of(node, comp);
            }
        }
        out
    };

    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_rows];
    for e in 0..n_elements {
        let dofs = local_dofs(e);
        for r in dofs.iter().flatten() {
            rows[*r].extend(dofs.iter().flatten());
        }
    }
    let mut k = CsrMatrix::from_pattern(rows);

    let mut cached: Option<(ElasticTensor4, [[f64; 8]; 8])> = None;
    for e in 0..n_elements {
        let c = coeff(e);
        if !(c.coercivity() > 0.0) {
            return Err(Error::NotCoercive {
                min_eigenvalue: c.coercivity(),
            });
        }
        let ke = match &cached {
            Some((cc, ke)) if *cc == c => *ke,
            _ => {
                let ke = element_stiffness(h, &c);
                cached = Some((c, ke));
                ke
            }
        };
        let dofs = local_dofs(e);
        for (a, ra) in dofs.iter().enumerate() {
            let Some(ra) = ra else { continue };
            for (b, rb) in dofs.iter().enumerate() {
                if let Some(rb) = rb {
                    k.add(*ra, *rb, ke[a][b]);
                }
            }
        }
    }
    Ok(k)
}

/// Reduced stiffness `K_rs = Σ_e ∫_e ε(φ_s):A_e:ε(φ_r)` with a
/// piecewise-constant coefficient per element.
pub fn assemble_stiffness(
    mesh: &StructuredMesh,
    coeff: impl Fn(usize) -> ElasticTensor4,
    dofs: &DofMap,
) -> Result<CsrMatrix> {
    assemble_generic(
        dofs.num_free(),
        mesh.num_elements(),
        mesh.h(),
        |e| mesh.element_nodes(e),
        coeff,
        |node, comp| dofs.reduced_index(node, comp),
    )
}

/// Reduced load `L_r = ∫ f·φ_r` for a constant body force.
pub fn assemble_body_load(mesh: &StructuredMesh, f: [f64; 2], dofs: &DofMap) -> Vec<f64> {
    assemble_body_load_with(mesh, |_| f, dofs)
}

/// Reduced load for a spatially varying body force.
pub fn assemble_body_load_with(
    mesh: &StructuredMesh,
    f: impl Fn([f64; 2]) -> [f64; 2],
    dofs: &DofMap,
) -> Vec<f64> {
    let mut load = vec![0.0; dofs.num_free()];
    let h = mesh.h();
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element_nodes(e);
        for gp in gauss_points(mesh.element_origin(e), h) {
            let n = shape_values(gp.xi);
            let fv = f(gp.x);
            for (a, &node) in nodes.iter().enumerate() {
                for comp in 0..2 {
                    if let Some(r) = dofs.reduced_index(node, comp) {
                        load[r] += fv[comp] * n[a] * gp.weight;
                    }
                }
            }
        }
    }
    load
}

/// Reduced traction load `L_r = ∫_{Γ_N} t·φ_r` with 2-point Gauss per segment.
/// `t_fn(x₂, time)` gives the traction on the loaded (left) edge.
pub fn assemble_traction(
    mesh: &StructuredMesh,
    t_fn: impl Fn(f64, f64) -> [f64; 2],
    time: f64,
    dofs: &DofMap,
) -> Vec<f64> {
    const G: f64 = 0.577_350_269_189_625_8;
    let mut load = vec![0.0; dofs.num_free()];
    for [a, b] in mesh.neumann_segments() {
        let (pa, pb) = (mesh.node_coords(a), mesh.node_coords(b));
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        for s in [-G, G] {
            let x2 = 0.5 * (pa[1] + pb[1]) + 0.5 * s * (pb[1] - pa[1]);
            let t = t_fn(x2, time);
            let w = 0.5 * len;
            for (node, phi) in [(a, 0.5 * (1.0 - s)), (b, 0.5 * (1.0 + s))] {
                for comp in 0..2 {
                    if let Some(r) = dofs.reduced_index(node, comp) {
                        load[r] += t[comp] * phi * w;
                    }
                }
            }
        }
    }
    load
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactWeight {
    pub node: usize,
    /// Trapezoid weight (m).
    pub weight: f64,
}

/// Trapezoid-rule weights of the bottom-edge nodes: `h` inside, `h/2` at the
/// two ends, so that `Σ ω_i |w_i|` integrates piecewise-linear `|w|` exactly
/// wherever `w` keeps its sign on a segment.
pub fn contact_weights(mesh: &StructuredMesh) -> Vec<ContactWeight> {
    let nodes = mesh.contact_edge_nodes();
    let last = nodes.len().saturating_sub(1);
    let h = mesh.h()[0];
    nodes
        .into_iter()
        .enumerate()
        .map(|(k, node)| ContactWeight {
            node,
            weight: if k == 0 || k == last { 0.5 * h } else { h },
        })
        .collect()
}
