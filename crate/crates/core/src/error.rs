use thiserror::Error;

/// Errors raised by the surrogate-modelling and sensitivity routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid distribution for `{name}`: {reason}")]
    InvalidDistribution { name: String, reason: String },

    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),

    #[error("random vector must contain at least one variable")]
    EmptyRandomVector,

    #[error("coordinate {index} (`{name}`) = {value} lies outside the support [{lower}, {upper}]")]
    OutOfSupport {
        index: usize,
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("Legendre polynomials are only defined on [-1, 1], got {0}")]
    LegendreDomain(f64),

    #[error("hyperbolic truncation requires 0 < q <= 1, got {0}")]
    InvalidNorm(f64),

    #[error("sample size must be at least 1")]
    EmptyDesign,

    #[error("experimental design has no responses")]
    MissingResponses,

    #[error("need more than {min} design points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error("saturated leverage at point {index} (h = {leverage})")]
    SaturatedLeverage { index: usize, leverage: f64 },

    #[error("basis size {card} must be smaller than the number of points {n}")]
    BasisTooLarge { card: usize, n: usize },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("response variance is zero")]
    ZeroVariance,

    #[error("non-positive response {0} cannot be log-transformed")]
    NonPositiveResponse(f64),

    #[error("every degree of the adaptive sweep failed: {0}")]
    AllDegreesFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
