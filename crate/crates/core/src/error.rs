use thiserror::Error;

/// Errors raised by the fixed point and ODE pipelines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("functionals do not separate generators {first} and {second}")]
    SeparationFailure { first: usize, second: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("admissibility audit failed: {0}")]
    AdmissibilityFailure(String),

    #[error("epsilon-net exceeded {cap} points (epsilon = {epsilon})")]
    NetOverflow { cap: usize, epsilon: f64 },

    #[error("point is not covered by the net (partition weight sum {weight_sum:e})")]
    UncoveredPoint { weight_sum: f64 },

    #[error("fixed point solver did not converge (best residual {best_residual:e})")]
    NotConverged { best_residual: f64, best_point: Vec<f64> },

    #[error("map output leaves the hull (barycentric residual {residual:e})")]
    MapLeavesHull { residual: f64 },

    #[error("hull dimension {dim} exceeds the grid oracle limit of 3")]
    DimensionTooHigh { dim: usize },

    #[error("no fixed point accepted (best residual {residual:e})")]
    NotFound { best: Vec<f64>, residual: f64 },

    #[error("a priori bound exceeded cap {cap:e} at t = {t}")]
    BlowUp { t: f64, cap: f64 },

    #[error("iterate left the tube at t = {t}: norm {norm} > allowed {allowed}")]
    TubeViolation { t: f64, norm: f64, allowed: f64 },

    #[error("growth condition violated at t = {t}: |f| = {norm} > alpha*phi = {bound}")]
    GrowthViolation { t: f64, norm: f64, bound: f64 },

    #[error("Picard iteration diverged at iterate {iterate}")]
    Diverged { iterate: usize },

    #[error("L_p estimate violated: {0}")]
    EstimateViolated(String),

    #[error("invalid config at line {line}: {reason}")]
    ConfigInvalid { line: usize, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
