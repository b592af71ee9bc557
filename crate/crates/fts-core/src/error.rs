//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, FtsError>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum FtsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The basis would alias on the grid. Requires 2*d < n.
    #[error("basis dimension {d} aliases on a grid of {n} points (need 2*d < n)")]
    Aliasing { d: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("insufficient data for {what}: need {needed}, have {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("operator not symmetric: asymmetry {asymmetry:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },

    #[error("operator not Hermitian: asymmetry {asymmetry:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { asymmetry: f64, tol: f64 },

    /// Leading eigenvalue is nonpositive; the operator cannot be inverted.
    #[error("degenerate operator: {0}")]
    DegenerateOperator(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("stacked dimension {dim} exceeds the cap of {cap}")]
    StackedDimensionCap { dim: usize, cap: usize },

    /// Inverse transform of a frequency response left imaginary mass behind.
    #[error("conjugate symmetry violated: imaginary residue {residue:.3e} exceeds {tol:.1e}")]
    ConjugateSymmetry { residue: f64, tol: f64 },

    #[error("autoregression operator is unstable: spectral radius {spectral_radius:.6}")]
    UnstableAr { spectral_radius: f64 },

    #[error("frequency grids differ: {left} vs {right} points")]
    FrequencyGridMismatch { left: usize, right: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FtsError {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        FtsError::InvalidArgument(msg.into())
    }
}
