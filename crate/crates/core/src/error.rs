use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shift {z} is numerically in the spectrum (pivot {pivot:.3e} below threshold {threshold:.3e})")]
    SingularShift { z: Complex64, pivot: f64, threshold: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix norm {norm:.3e} exceeds the exponential scaling budget {budget:.3e}")]
    OverflowRisk { norm: f64, budget: f64 },
    #[error("operator is not sectorial at angle {theta}: resolvent fails at z = {z}")]
    NotSectorialAtAngle { theta: f64, z: Complex64 },
    #[error("extended sector bound violated at z = {z}: {value:.6} > {bound:.6}")]
    ExtensionViolated { z: Complex64, value: f64, bound: f64 },
    #[error("decay probe grows with the sampling radius ({near:.4e} -> {far:.4e})")]
    UnboundedSuspected { near: f64, far: f64 },
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("truncation not converged: tail estimate {estimate:.3e} exceeds {tolerance:.3e}")]
    TruncationNotConverged { estimate: f64, tolerance: f64 },
    #[error("kernel is not odd at the singularity (cancellation residual {residual:.3e})")]
    AsymmetryDetected { residual: f64 },
    #[error("symbol violates its decay class at lambda = {lambda}: |f| = {value:.4e} > {bound:.4e}")]
    ClassViolated { lambda: Complex64, value: f64, bound: f64 },
    #[error("angle {theta} outside the admissible range |theta| < {limit}")]
    AngleOutOfRange { theta: f64, limit: f64 },
    #[error("witness denominator {value:.3e} is degenerate")]
    DenominatorDegenerate { value: f64 },
    #[error("bound violated: measured {measured:.6e} > allowed {allowed:.6e}")]
    BoundViolated { measured: f64, allowed: f64 },
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("reports are not comparable: {0}")]
    IncompatibleReports(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Numeric failures map to exit code 1, configuration problems to 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_)
            | Error::InvalidInput(_)
            | Error::InvalidRecipe(_)
            | Error::InvalidContour(_)
            | Error::Parse(_)
            | Error::Json(_)
            | Error::Io(_) => 2,
            _ => 1,
        }
    }
}
