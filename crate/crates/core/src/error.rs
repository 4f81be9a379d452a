use thiserror::Error;

#[derive(Debug, Error)]
pub enum GptError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cone is not full-dimensional (rank {rank} < {dim}); its dual contains a line")]
    Lineality { rank: usize, dim: usize },

    #[error("invalid theory: {0}")]
    InvalidTheory(String),

    #[error("vertices do not span the ambient space")]
    NotSpanning,

    #[error("theory is not transitive")]
    NotTransitive,

    #[error("invalid effect: {0}")]
    InvalidEffect(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("point is outside the state space")]
    OutsideStateSpace,

    #[error("theory does not support this operation: {0}")]
    NotConforming(String),

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("linear program numerics: {0}")]
    LpNumerics(String),

    #[error("averaged J is not of the form P_M + xi P_M^perp (eigenvalue spread {spread:e})")]
    XiNotScalar { spread: f64 },

    #[error("metric: {0}")]
    InvalidMetric(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GptError>;
