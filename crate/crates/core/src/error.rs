use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular-chart: polar chart is singular at r = {0:e}")]
    SingularChart(f64),
    #[error("insufficient-smoothness: operation needs C^{needed}, field is {found}")]
    InsufficientSmoothness { needed: u8, found: String },
    #[error("unsupported-geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("budget-exceeded: {nodes} quadrature nodes exceed the budget of {budget}")]
    BudgetExceeded { nodes: u128, budget: u128 },
    #[error("invalid-alpha: Wang-Harnack exponent must exceed 1, got {0}")]
    InvalidAlpha(f64),
    #[error("not-tangent: vector is not tangent at the base point (residual {0:e})")]
    NotTangent(f64),
    #[error("cut-locus: points are (nearly) conjugate, angle {0}")]
    CutLocus(f64),
    #[error("variance-unsafe: finite-difference gradients require common random numbers")]
    VarianceUnsafe,
    #[error("hypothesis-violated: {0}")]
    HypothesisViolated(String),
    #[error("field-class: {0}")]
    FieldClass(String),
    #[error("config: {0}")]
    Config(String),
    #[error("invalid-argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
