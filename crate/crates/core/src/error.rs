use thiserror::Error;

/// Errors raised by the MCF library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum McfError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate direction: cannot normalize a zero-length vector")]
    DegenerateDirection,

    #[error("numerical error: {0}")]
    NumericalError(String),

    #[error("no start converged within {max_iters} iterations (best value {best_value})")]
    NonConvergence {
        max_iters: usize,
        best_direction: Vec<f64>,
        best_value: f64,
    },

    #[error("degenerate spectrum: the leading eigenspace is not one-dimensional")]
    DegenerateSpectrum,

    #[error("outside domain: {0}")]
    OutsideDomain(DomainViolation),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("degenerate projection: projected data have zero variance")]
    DegenerateProjection,

    #[error("data must be centered before this operation")]
    NotCentered,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Which logarithm of the gamma cumulant function lost its positive argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainViolation {
    /// `r * theta_i >= 1` for the given component.
    Component(usize),
    /// `r * sum(theta) >= 1`.
    Sum,
}

impl std::fmt::Display for DomainViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainViolation::Component(i) => write!(f, "r * theta[{i}] >= 1"),
            DomainViolation::Sum => write!(f, "r * sum(theta) >= 1"),
        }
    }
}

impl McfError {
    /// Stable machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            McfError::InsufficientData(_) => "InsufficientData",
            McfError::DegenerateDirection => "DegenerateDirection",
            McfError::NumericalError(_) => "NumericalError",
            McfError::NonConvergence { .. } => "NonConvergence",
            McfError::DegenerateSpectrum => "DegenerateSpectrum",
            McfError::OutsideDomain(_) => "OutsideDomain",
            McfError::NotPositiveDefinite => "NotPositiveDefinite",
            McfError::DegenerateProjection => "DegenerateProjection",
            McfError::NotCentered => "NotCentered",
            McfError::DimensionMismatch { .. } => "DimensionMismatch",
            McfError::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T, E = McfError> = std::result::Result<T, E>;
