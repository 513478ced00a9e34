use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point is not in the image of the gradient map (newton: {reason})")]
    NotInDualDomain { reason: String },
    #[error("hessian is numerically singular (condition number {condition:e})")]
    SingularHessian { condition: f64 },
    #[error("point lies outside the domain: {0}")]
    DomainViolation(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("outcome {0} is not in the sample space")]
    OutcomeNotInSpace(String),
    #[error("natural parameter outside the family domain")]
    ThetaOutOfDomain,
    #[error("truncated series did not converge (tail mass {tail:e})")]
    TruncationNotConverged { tail: f64 },
    #[error("operation needs a finite sample space")]
    InfiniteSampleSpace,
    #[error("family `{0}` is not toric")]
    NotToric(String),
    #[error("unsupported target geometry: {0}")]
    UnsupportedTarget(String),
    #[error("dimension {0} exceeds the supported limit")]
    DimensionTooLarge(usize),
    #[error("lifts cannot be composed: {0}")]
    FactorizationMismatch(String),
    #[error("no conjugating pair found among {tried} candidates")]
    NoWitnessFound { tried: usize },
    #[error("symplectic form is singular")]
    SingularOmega,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
