//! Time stepping for the quasistatic Tresca friction problem.
//!
//! With the backward difference `w = (uᵐ − uᵐ⁻¹)/Δt`, every step minimizes
//!
//! ```text
//! F(w) = (Δt/2) wᵀKw + (K uᵐ⁻¹ − L(tₘ))ᵀw + H_T Σ_i ω_i |w_i|
//! ```
//!
//! over the free DOFs, the sum running over the tangential DOFs of the
//! contact nodes. The minimizer satisfies the discrete variational
//! inequality of the second kind; it is computed with an accelerated
//! proximal gradient method.

mod condensed;
mod fista;
mod march;
mod problem;

pub use condensed::{CondensedSystem, DENSE_COUPLING_LIMIT};
pub use fista::{estimate_lipschitz, fista_minimize, FistaOptions, FistaOutcome};
pub use march::{
    march, march_with, solve_initial, write_diagnostics, write_snapshot_csv, write_snapshot_file,
    MarchOptions, Marcher, QuasistaticSolution, StepDiagnostics, StepRecord, StepStrategy,
};
pub use problem::{
    contact_dofs, friction_prox, step_objective, stick_slip_check, vi_residual, AffineLoad,
    CompositeQuadratic, ContactDof, FrictionProx, QuasistaticProblem, StickSlipReport, TimeGrid,
    TrescaLoading,
};
