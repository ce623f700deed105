use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid material phase (E = {e}, nu = {nu}): {reason}")]
    InvalidPhase {
        e: f64,
        nu: f64,
        reason: &'static str,
    },

    #[error("elasticity tensor is not coercive (smallest eigenvalue {min_eigenvalue:e})")]
    NotCoercive { min_eigenvalue: f64 },

    #[error("elasticity tensor violates its symmetries (defect {defect:e})")]
    NotSymmetric { defect: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged { iterations: usize, residual: f64 },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("zero reference gradient norm at time step {step}")]
    ZeroReference { step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep needs at least {needed} rows, got {got}")]
    InsufficientRows { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}
