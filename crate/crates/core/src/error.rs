use thiserror::Error;

/// Errors surfaced by algebra, flow, chain, and harness operations.
#[derive(Debug, Error)]
pub enum LieFlowError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("structure constants violate antisymmetry at ({i},{j},{k}): {defect:.3e}")]
    Antisymmetry { i: usize, j: usize, k: usize, defect: f64 },

    #[error("jacobi identity fails on basis triple ({i},{j},{k}): defect {defect:.3e}")]
    Jacobi { i: usize, j: usize, k: usize, defect: f64 },

    #[error("map is not a derivation: Leibniz defect {defect:.3e} on basis pair ({i},{j})")]
    NotADerivation { i: usize, j: usize, defect: f64 },

    #[error("numerical degeneracy: {0}")]
    Degeneracy(String),

    #[error("point outside chart window: {0}")]
    OutOfWindow(String),

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid ideal: {0}")]
    InvalidIdeal(String),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LieFlowError {
    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        LieFlowError::Parse { context: context.into(), message: message.into() }
    }
}
