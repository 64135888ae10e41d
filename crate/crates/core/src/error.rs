use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bath size must be at least 1")]
    EmptyBath,
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value")]
    NonFinite,
    #[error("{what} not normalized: |x|^2 + |y|^2 = {norm}")]
    NotNormalized { what: &'static str, norm: f64 },
    #[error("binary exponent overflow")]
    ExponentOverflow,
    #[error("value exceeds the native floating-point range")]
    RangeOverflow,
    #[error("bath size {n} exceeds the brute-force limit of {max}")]
    BathTooLarge { n: usize, max: usize },
    #[error("|Lambda(0)| = 10^{log10_lambda0:.3} is negligible against |Gamma(0)|; no off-diagonal content to track")]
    NormalizationDegenerate { log10_lambda0: f64 },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
