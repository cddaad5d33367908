use thiserror::Error;

/// Errors produced by kernel evaluation, root finding and the verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    DomainError(String),

    #[error("z = {re}{im:+}i lies within {distance:e} of the pole -b_{k}")]
    PoleProximity { re: f64, im: f64, k: u64, distance: f64 },

    #[error("tolerance {tol:e} not reached within {budget} terms (bound {bound:e})")]
    ToleranceUnreachable { tol: f64, bound: f64, budget: u64 },

    #[error("|arg z| = {arg} exceeds pi - delta = {limit}")]
    SectorViolation { arg: f64, limit: f64 },

    #[error("quadrature failed to reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureFailure { tol: f64, estimate: f64 },

    #[error("|tau| = {0} is outside the contraction disc |tau| < 1/2")]
    RegionViolation(f64),

    #[error("fixed-point iterate left |tau| < 1/2 at step {step} (|tau| = {modulus})")]
    EscapedRegion { step: usize, modulus: f64 },

    #[error("mode n = {n}: no convergence ({reason})")]
    NoConvergence { n: u64, reason: String },

    #[error("|D_n| = {value:e} on the boundary at {re}{im:+}i is below the threshold")]
    BoundaryTooClose { re: f64, im: f64, value: f64 },

    #[error("winding number {0} is not within 0.2 of an integer")]
    NonIntegerWinding(f64),

    #[error("bisection lost the zero (both halves count zero)")]
    LostZero,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite value produced: {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
