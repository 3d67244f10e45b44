use thiserror::Error;

/// Errors raised by the lattice, discrepancy, quadrature, gabor and certify modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("basis is singular (determinant {det:e})")]
    SingularBasis { det: f64 },

    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },

    #[error("{name} must be finite (got {value})")]
    NonFinite { name: &'static str, value: f64 },

    #[error("{name} must lie in {range} (got {value})")]
    OutOfRange { name: &'static str, value: f64, range: &'static str },

    #[error("degenerate box [{x0}, {x1}] x [{y0}, {y1}]")]
    DegenerateBox { x0: f64, x1: f64, y0: f64, y1: f64 },

    #[error("invalid quadratic surd: {0}")]
    InvalidSurd(String),

    #[error("integer overflow in exact surd arithmetic")]
    Overflow,

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("point ({x}, {y}) lies outside the unit square")]
    OutsideUnitSquare { x: f64, y: f64 },

    #[error("normalizer must be at least 1")]
    ZeroNormalizer,

    #[error("coverage violation: the unit square anchored at ({x}, {y}) contains no sampling point")]
    CoverageViolation { x: f64, y: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical integration did not converge: {0}")]
    Convergence(String),

    #[error("truncation budget {budget:e} exceeds tolerance {tolerance:e}")]
    TruncationBudget { budget: f64, tolerance: f64 },

    #[error("lattice is not (empirically) admissible: margin {margin} at coefficient bound {bound}")]
    NotAdmissible { margin: f64, bound: u64 },

    #[error("sampling grid too coarse: requested frequency {requested} exceeds Nyquist limit {nyquist}")]
    Nyquist { requested: f64, nyquist: f64 },

    #[error("phase-space box too small: {0}")]
    PhaseSpaceBox(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite { name, value });
    }
    if value <= 0.0 {
        return Err(Error::NonPositive { name, value });
    }
    Ok(())
}
