use thiserror::Error;

/// Errors raised by model validation, discretization and the reference pricers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("unknown example index {0} (expected 1..=4)")]
    UnknownExample(u32),

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("triangle id {0} out of range")]
    TriangleOutOfRange(usize),

    #[error("point ({0}, {1}) lies outside the mesh")]
    PointOutsideDomain(f64, f64),

    #[error("solutions live on different spaces")]
    MismatchedSpaces,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate penalty: smallest diffusion eigenvalue {0} on edge {1}")]
    DegeneratePenalty(f64, usize),

    #[error("inconsistent boundary tags: {0}")]
    InconsistentBoundary(String),

    #[error("time horizon {horizon} is not an integer multiple of step {step}")]
    NonDivisibleHorizon { horizon: f64, step: f64 },

    #[error("time horizon too short: {0}")]
    HorizonTooShort(String),

    #[error("singular system matrix: {0}")]
    SingularSystem(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
