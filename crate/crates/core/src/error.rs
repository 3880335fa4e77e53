use thiserror::Error;

use crate::rhs::SimState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field shape mismatch: expected {expected} samples per component, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("component count mismatch: expected {expected}, found {found}")]
    ComponentMismatch { expected: usize, found: usize },

    #[error("Hermitian symmetry broken: relative residue {residue:e} exceeds {tolerance:e}")]
    HermitianViolation { residue: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field is not compactly supported on the patch: boundary/peak ratio {ratio:e}")]
    SupportViolation { ratio: f64 },

    #[error("blow-up at t = {t}: {quantity} = {value:e}")]
    BlowUp {
        t: f64,
        quantity: &'static str,
        value: f64,
        /// Last state that passed the finiteness check.
        last_good: Option<Box<SimState>>,
    },

    #[error("non-monotone error sequence in convergence study: {0:?}")]
    NonMonotoneErrors(Vec<f64>),

    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error(transparent)]
    Checkpoint(#[from] crate::checkpoint::CheckpointError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            message: message.into(),
        }
    }
}
