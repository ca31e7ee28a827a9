use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chart dimension {0} outside 1..=8")]
    InvalidDimension(usize),
    #[error("chart mismatch: dim {left} vs dim {right}")]
    ChartMismatch { left: usize, right: usize },
    #[error("coordinate index {index} out of range for dim {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected a form of pure degree {expected}")]
    NotPureDegree { expected: usize },
    #[error("expected an even form")]
    NotEven,
    #[error("form is not closed: {0}")]
    NotClosed(String),
    #[error("vector part of {0} does not vanish")]
    NonvanishingVectorPart(String),
    #[error("matrix singular at point {0}")]
    Singular(String),
    #[error("unstable at {0}")]
    Unstable(String),
    #[error("orbit sign flipped at {0}")]
    OrbitFlip(String),
    #[error("result is not exactly representable: {0}")]
    NotExact(String),
    #[error("annihilation precondition violated: {0}")]
    Annihilation(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("malformed cover data: {0}")]
    MalformedCover(String),
    #[error("unknown overlap ({0}, {1})")]
    UnknownOverlap(String, String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("too few time slices: need {needed}, have {have}")]
    TooFewSteps { needed: usize, have: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
