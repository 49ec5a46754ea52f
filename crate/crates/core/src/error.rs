use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("dimension {n} outside the supported range [{min}, {max}]")]
    DimensionOutOfRange { n: usize, min: usize, max: usize },
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("{0} is not a perfect square")]
    NotPerfectSquare(usize),
    #[error("entry data has length {found}, expected {expected}")]
    BadLength { expected: usize, found: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("trace {trace} deviates from 1")]
    BadTrace { trace: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("state vector norm {norm} deviates from 1")]
    NotNormalized { norm: f64 },
    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("polar factor is degenerate (smallest singular value {smallest:e})")]
    DegeneratePolar { smallest: f64 },
    #[error("rank {rank} must lie in [1, {n}]")]
    InvalidRank { rank: usize, n: usize },
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("twirl needs local dimension n >= 2, got {0}")]
    TwirlDegenerate(usize),
    #[error("fidelity needs local dimension n >= 2, got {0}")]
    TrivialDimension(usize),
    #[error("decomposition did not converge: {0}")]
    NoConvergence(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
