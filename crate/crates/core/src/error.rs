use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the QHSL pipeline.
#[derive(Debug, Error)]
pub enum QhslError {
    #[error("invalid color: {0}")]
    InvalidColor(String),

    #[error("invalid chroma state: {0}")]
    InvalidChroma(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("qubit {qubit} is out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("target qubit {0} also appears in the control pattern")]
    IndexConflict(usize),

    #[error("qubit {0} appears more than once in a control pattern")]
    DuplicateControl(usize),

    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("set gate on qubit {target} met a superposed target (minority weight {weight:e})")]
    NonBasisTarget { target: usize, weight: f64 },

    #[error("registers overlap at qubit {0}")]
    RegisterOverlap(usize),

    #[error("{needed} qubits exceed the dense simulation budget of {budget}")]
    QubitBudget { needed: usize, budget: usize },

    #[error("insufficient ancilla budget: need {needed}, have {available}")]
    InsufficientAncilla { needed: usize, available: usize },

    #[error("gate {0} is not a basis permutation")]
    NotPermutation(String),

    #[error("gate {0} has no inverse in the gate vocabulary")]
    NotInvertible(String),

    #[error("state left the structured image form: {0}")]
    NotStructured(String),

    #[error("inconsistent measurement statistics: {0}")]
    InconsistentStatistics(String),

    #[error("lightness register of pixel ({y}, {x}) is not in a basis state")]
    NonBasisLightness { y: usize, x: usize },

    #[error("invalid region constraint: {0}")]
    InvalidRegion(String),

    #[error("invalid pseudocolor map: {0}")]
    InvalidMap(String),

    #[error("input is not a canonical grayscale image: {0}")]
    NotGrayscale(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("image of {width}x{height} does not fit a {side}x{side} register")]
    DimensionOverflow {
        width: usize,
        height: usize,
        side: usize,
    },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("{}:{line}: {message}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QhslError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        QhslError::Parse {
            path: None,
            line,
            message: message.into(),
        }
    }

    /// Attach a file path to a parse error.
    pub fn with_path(self, path: impl Into<PathBuf>) -> Self {
        match self {
            QhslError::Parse { line, message, .. } => QhslError::Parse {
                path: Some(path.into()),
                line,
                message,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, QhslError>;
