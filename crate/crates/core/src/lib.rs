//! Periodic homogenization of quasistatic Tresca friction contact problems
//! for 2D plane-stress linear elasticity.
//!
//! The crate is organized bottom-up:
//!
//! - [`materials`]: rank-4 elasticity tensors, the plane-stress isotropic law
//!   and the unit-cell coefficient layouts.
//! - [`mesh_fem`]: structured Q1 meshes, DOF maps, assembly, sparse storage
//!   and a Jacobi-preconditioned conjugate gradient solver.
//! - [`cell_solver`]: periodic cell problems, correctors and the effective
//!   tensor, plus the first-order two-scale expansion gradient.
//! - [`quasistatic`]: the time-stepping solver for the Tresca variational
//!   inequality (accelerated proximal gradient per step).
//! - [`harness`]: experiment configuration, error metrics, sweeps and reports.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cell_solver;
pub mod error;
pub mod harness;
pub mod materials;
pub mod mesh_fem;
pub mod quasistatic;

pub use error::{Error, Result};
