use super::mesh::{NodeTag, StructuredMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofStatus {
    Free,
    FixedZero,
}

/// Two displacement DOFs per node, global id `2 * node + component`.
/// Free DOFs are numbered consecutively into the reduced vector.
#[derive(Debug, Clone)]
pub struct DofMap {
    status: Vec<DofStatus>,
    reduced: Vec<Option<usize>>,
    free: Vec<usize>,
}

impl DofMap {
    /// Constraints implied by the node tags: clamped nodes fix both
    /// components, contact nodes fix the normal component `u²`.
    pub fn new(mesh: &StructuredMesh) -> Self {
        let status = mesh
            .tags()
            .iter()
            .flat_map(|tag| match tag {
                NodeTag::Dirichlet => [DofStatus::FixedZero, DofStatus::FixedZero],
                NodeTag::Contact => [DofStatus::Free, DofStatus::FixedZero],
                _ => [DofStatus::Free, DofStatus::Free],
            })
            .collect();
        Self::from_status(status)
    }

    pub fn all_free(num_nodes: usize) -> Self {
        Self::from_status(vec![DofStatus::Free; 2 * num_nodes])
    }

    fn from_status(status: Vec<DofStatus>) -> Self {
        let mut reduced = vec![None; status.len()];
        let mut free = Vec::new();
        for (dof, s) in status.iter().enumerate() {
            if *s == DofStatus::Free {
                reduced[dof] = Some(free.len());
                free.push(dof);
            }
        }
        Self {
            status,
            reduced,
            free,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.status.len()
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    pub fn status(&self, dof: usize) -> DofStatus {
        self.status[dof]
    }

    /// Reduced index of `(node, component)`, `None` when fixed.
    #[inline]
    pub fn reduced_index(&self, node: usize, comp: usize) -> Option<usize> {
        self.reduced[2 * node + comp]
    }

    /// Global DOF id of a reduced index.
    pub fn global_dof(&self, reduced: usize) -> usize {
        self.free[reduced]
    }

    /// Full nodal vector with zeros at fixed DOFs.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.status.len()];
        for (r, &dof) in self.free.iter().enumerate() {
            full[dof] = reduced[r];
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&dof| full[dof]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_constraints() {
        let mesh = StructuredMesh::benchmark(2).unwrap();
        let dofs = DofMap::new(&mesh);
        // 3 clamped nodes (6 dofs) + 2 contact normals
        assert_eq!(dofs.num_free(), 18 - 6 - 2);
        let corner = mesh.node_id(0, 0);
        assert!(dofs.reduced_index(corner, 0).is_some());
        assert!(dofs.reduced_index(corner, 1).is_none());
        let clamped = mesh.node_id(2, 0);
        assert!(dofs.reduced_index(clamped, 0).is_none());
        assert!(dofs.reduced_index(clamped, 1).is_none());
    }

    #[test]
    fn expand_restrict() {
        let mesh = StructuredMesh::benchmark(3).unwrap();
        let dofs = DofMap::new(&mesh);
        let r: Vec<f64> = (0..dofs.num_free()).map(|i| i as f64 + 1.0).collect();
        let full = dofs.expand(&r);
        assert_eq!(dofs.restrict(&full), r);
        let fixed = (0..dofs.num_dofs()).filter(|&d| dofs.status(d) == DofStatus::FixedZero);
        for d in fixed {
            assert_eq!(full[d], 0.0);
        }
    }
}
