//! Experiment driver: configuration, oscillating and homogenized runs on a
//! shared mesh, error norms, rate fits and reports.

mod config;
mod metrics;
mod report;
mod run;
mod verify;

pub use config::{ExperimentConfig, Profile};
pub use metrics::{compute_err1, compute_err2, gradient_norm, step_norms, ErrorTracker, StepNorms};
pub use report::{fit_rate, ErrorReport, ErrorRow, RateSummary, Verdict, ERR1_PLATEAU};
pub use run::{
    build_problems, march_options, run_case, run_case_with, run_cell, run_sweep,
    write_sweep_outputs, CaseResult, SweepResult,
};
pub use verify::{
    check_effective_bounds, check_frictionless_limit, check_laminate, check_negative_control,
    check_published_tables, check_rate, check_trivial_homogenization, check_vi_optimality,
    desk_single, laminate_tensor, square_symmetry_defect, CheckOutcome, PUBLISHED_CROSS_FULL,
    PUBLISHED_CROSS_INSET,
};
