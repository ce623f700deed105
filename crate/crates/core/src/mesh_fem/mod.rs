//! Structured Q1 finite elements on rectangles.

mod assembly;
mod cg;
mod dofs;
mod element;
mod mesh;
mod solver;
mod sparse;

pub use assembly::{
    assemble_body_load, assemble_body_load_with, assemble_generic, assemble_stiffness,
    assemble_traction, contact_weights, ContactWeight,
};
pub use cg::{
    cg_solve, cg_solve_from, default_max_iter, CgOptions, CgSolution, LinearOperator, Projector,
};
pub use dofs::{DofMap, DofStatus};
pub use element::{
    element_load, element_stiffness, gauss_points, shape_gradients, shape_values, GaussPoint,
    GAUSS_2X2,
};
pub use mesh::{BoundaryRule, NodeTag, Rect, StructuredMesh};
pub use solver::SpdSolver;
pub use sparse::CsrMatrix;
