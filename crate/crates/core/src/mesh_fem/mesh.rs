use std::fmt::Write;

use crate::error::{Error, Result};

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub origin: [f64; 2],
    pub extent: [f64; 2],
}

impl Rect {
    pub const UNIT: Rect = Rect {
        origin: [0.0, 0.0],
        extent: [1.0, 1.0],
    };

    pub fn area(&self) -> f64 {
        self.extent[0] * self.extent[1]
    }
}

/// How boundary nodes are classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryRule {
    /// Clamped right edge, loaded left edge, frictional contact on the bottom
    /// edge, traction-free top edge. The corner shared by the right and
    /// bottom edges is clamped; the corner shared by the left and bottom
    /// edges is a contact node.
    TrescaBenchmark,
    /// Every boundary node clamped.
    Clamped,
    /// No constraints anywhere.
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeTag {
    Interior,
    Dirichlet,
    Neumann,
    Contact,
    Free,
}

/// Uniform quadrilateral mesh with bilinear elements.
///
/// Node `(i, j)` has id `j * (nx + 1) + i`; element `(i, j)` has id
/// `j * nx + i` and nodes listed counterclockwise from its lower-left corner.
#[derive(Debug, Clone)]
pub struct StructuredMesh {
    nx: usize,
    ny: usize,
    rect: Rect,
    rule: BoundaryRule,
    tags: Vec<NodeTag>,
}

impl StructuredMesh {
    pub fn build(nx: usize, ny: usize, rect: Rect, rule: BoundaryRule) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!(
                "element counts must be positive, got {nx}x{ny}"
            )));
        }
        if !(rect.extent[0] > 0.0 && rect.extent[1] > 0.0) {
            return Err(Error::InvalidMesh(
                "rectangle extent must be positive".into(),
            ));
        }
        let mut tags = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let on_boundary = i == 0 || j == 0 || i == nx || j == ny;
                let tag = match rule {
                    _ if !on_boundary => NodeTag::Interior,
                    BoundaryRule::TrescaBenchmark => {
                        if i == nx {
                            NodeTag::Dirichlet
                        } else if j == 0 {
                            NodeTag::Contact
                        } else if i == 0 {
                            NodeTag::Neumann
                        } else {
                            NodeTag::Free
                        }
                    }
                    BoundaryRule::Clamped => NodeTag::Dirichlet,
                    BoundaryRule::Unconstrained => NodeTag::Free,
                };
                tags.push(tag);
            }
        }
        Ok(Self {
            nx,
            ny,
            rect,
            rule,
            tags,
        })
    }

    /// Unit square with the benchmark boundary layout, `n` elements per axis.
    pub fn benchmark(n: usize) -> Result<Self> {
        Self::build(n, n, Rect::UNIT, BoundaryRule::TrescaBenchmark)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn rule(&self) -> BoundaryRule {
        self.rule
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    /// Element sizes `[hx, hy]`.
    pub fn h(&self) -> [f64; 2] {
        [
            self.rect.extent[0] / self.nx as f64,
            self.rect.extent[1] / self.ny as f64,
        ]
    }

    #[inline]
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(node);
        let h = self.h();
        [
            self.rect.origin[0] + i as f64 * h[0],
            self.rect.origin[1] + j as f64 * h[1],
        ]
    }

    pub fn tag(&self, node: usize) -> NodeTag {
        self.tags[node]
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    #[inline]
    pub fn element_ij(&self, elem: usize) -> (usize, usize) {
        (elem % self.nx, elem / self.nx)
    }

    /// Counterclockwise node ids of an element.
    #[inline]
    pub fn element_nodes(&self, elem: usize) -> [usize; 4] {
        let (i, j) = self.element_ij(elem);
        [
            self.node_id(i, j),
            self.node_id(i + 1, j),
            self.node_id(i + 1, j + 1),
            self.node_id(i, j + 1),
        ]
    }

    /// Lower-left corner of an element.
    pub fn element_origin(&self, elem: usize) -> [f64; 2] {
        let (i, j) = self.element_ij(elem);
        let h = self.h();
        [
            self.rect.origin[0] + i as f64 * h[0],
            self.rect.origin[1] + j as f64 * h[1],
        ]
    }

    pub fn element_centroid(&self, elem: usize) -> [f64; 2] {
        let o = self.element_origin(elem);
        let h = self.h();
        [o[0] + 0.5 * h[0], o[1] + 0.5 * h[1]]
    }

    /// Boundary segments carrying the Neumann traction, ordered bottom to top.
    pub fn neumann_segments(&self) -> Vec<[usize; 2]> {
        match self.rule {
            BoundaryRule::TrescaBenchmark => (0..self.ny)
                .map(|j| [self.node_id(0, j), self.node_id(0, j + 1)])
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Nodes on the bottom edge, left to right, when the contact edge exists.
    pub fn contact_edge_nodes(&self) -> Vec<usize> {
        match self.rule {
            BoundaryRule::TrescaBenchmark => (0..=self.nx).map(|i| self.node_id(i, 0)).collect(),
            _ => Vec::new(),
        }
    }

    /// Plain-text dump of the node table for debugging.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        let h = self.h();
        let _ = writeln!(
            out,
            "# mesh {}x{} h=({}, {}) rule={:?}",
            self.nx, self.ny, h[0], h[1], self.rule
        );
        let _ = writeln!(out, "# node i j x1 x2 tag");
        for node in 0..self.num_nodes() {
            let (i, j) = self.node_ij(node);
            let x = self.node_coords(node);
            let _ = writeln!(
                out,
                "{node} {i} {j} {} {} {:?}",
                x[0], x[1], self.tags[node]
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_spacing() {
        let mesh = StructuredMesh::benchmark(4).unwrap();
        assert_eq!(mesh.num_nodes(), 25);
        assert_eq!(mesh.num_elements(), 16);
        assert_eq!(mesh.h(), [0.25, 0.25]);
    }

    #[test]
    fn benchmark_resolution_for_four_cells() {
        let mesh = StructuredMesh::benchmark(4 * 32).unwrap();
        assert_eq!(mesh.nx(), 128);
        assert_eq!(mesh.h()[0], 1.0 / 128.0);
    }

    #[test]
    fn rejects_empty_mesh() {
        assert!(StructuredMesh::build(0, 3, Rect::UNIT, BoundaryRule::Clamped).is_err());
        assert!(StructuredMesh::build(3, 0, Rect::UNIT, BoundaryRule::Clamped).is_err());
    }

    #[test]
    fn boundary_tags_on_two_by_two() {
        let mesh = StructuredMesh::benchmark(2).unwrap();
        let tag = |i, j| mesh.tag(mesh.node_id(i, j));
        assert_eq!(tag(0, 0), NodeTag::Contact);
        assert_eq!(tag(1, 0), NodeTag::Contact);
        assert_eq!(tag(2, 0), NodeTag::Dirichlet);
        assert_eq!(tag(2, 1), NodeTag::Dirichlet);
        assert_eq!(tag(2, 2), NodeTag::Dirichlet);
        assert_eq!(tag(1, 2), NodeTag::Free);
        assert_eq!(tag(0, 2), NodeTag::Neumann);
        assert_eq!(tag(0, 1), NodeTag::Neumann);
        assert_eq!(tag(1, 1), NodeTag::Interior);
    }

    #[test]
    fn elements_are_counterclockwise() {
        let mesh = StructuredMesh::build(
            3,
            2,
            Rect {
                origin: [1.0, -1.0],
                extent: [3.0, 1.0],
            },
            BoundaryRule::Clamped,
        )
        .unwrap();
        for e in 0..mesh.num_elements() {
            let p: Vec<[f64; 2]> = mesh
                .element_nodes(e)
                .iter()
                .map(|&n| mesh.node_coords(n))
                .collect();
            let mut area2 = 0.0;
            for a in 0..4 {
                let b = (a + 1) % 4;
                area2 += p[a][0] * p[b][1] - p[b][0] * p[a][1];
            }
            assert!((area2 * 0.5 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn dump_lists_every_node() {
        let mesh = StructuredMesh::benchmark(2).unwrap();
        let dump = mesh.debug_dump();
        assert_eq!(dump.lines().filter(|l| !l.starts_with('#')).count(), 9);
        assert!(dump.contains("Dirichlet"));
    }
}
