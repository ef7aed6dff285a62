use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian (max |M - M^+| = {defect:e})")]
    HermiticityViolation { defect: f64 },
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("truncation unresolved: {0}")]
    TruncationUnresolved(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("divergence suspected after {iterations} iterations (residual {residual:e})")]
    DivergenceSuspected { iterations: usize, residual: f64 },
    #[error("unsupported squeezing direction theta = {0}")]
    UnsupportedDirection(f64),
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
}
