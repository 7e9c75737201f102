use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum UtmError {
    #[error("expected {expected} boundary conditions for order {order}, got {found}")]
    WrongConditionCount {
        order: usize,
        expected: usize,
        found: usize,
    },
    #[error("boundary forms are rank deficient (rank {rank} < {rows})")]
    RankDeficientBoundary { rank: usize, rows: usize },
    #[error("dispersion constant {0} is inadmissible for this order")]
    InadmissibleDispersion(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("kernel of the boundary matrix could not be computed consistently")]
    KernelComputationFailed,
    #[error("complementary boundary forms could not be constructed")]
    CompletionFailed,
    #[error("coefficients do not lie in the kernel of the boundary forms (residual {0:e})")]
    CoeffsNotInKernel(f64),
    #[error("characteristic determinant vanishes identically")]
    DeltaIdenticallyZero,
    #[error("spectral parameter {0} sits on a zero of the characteristic determinant")]
    OnDeltaZero(String),
    #[error("contour system has no components")]
    NoComponents,
    #[error("no decay sector adjacent to ray at angle {0}")]
    NoDecaySector(f64),
    #[error("semi-infinite segment needs a decay model to be truncated")]
    TailBoundUnavailable,
    #[error("x must be positive, got {0}")]
    NonpositiveX(f64),
    #[error("t > 0 requires a time-deformed contour system")]
    DeformationRequired,
    #[error("remainder fit residual {residual:e} exceeds {limit:e}")]
    FitResidualTooLarge { residual: f64, limit: f64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, UtmError>;
