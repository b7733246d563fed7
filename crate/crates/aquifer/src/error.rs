use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model data: {0}")]
    InvalidData(String),

    #[error("failed to parse model data: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("parameter `{name}` = {value} outside [{lower}, {upper}]")]
    ParameterOutOfRange {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },

    #[error("unknown layer `{0}`")]
    UnknownLayer(String),

    #[error("matrix is not symmetric positive definite (pivot {pivot:e} at row {row})")]
    NonSpd { row: usize, pivot: f64 },

    #[error("zero or negative pivot {pivot:e} at row {row}")]
    SingularPivot { row: usize, pivot: f64 },

    #[error("linear solver stalled at relative residual {residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("negative lifetime expectancy {value:e} s at cell {cell} (max {max:e} s)")]
    NegativeLifetime { cell: usize, value: f64, max: f64 },

    #[error("target zone contains no cell centers")]
    EmptyTargetZone,

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
