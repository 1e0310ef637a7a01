use thiserror::Error;

/// Errors raised by the solvers, transforms and checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} lies outside the domain {domain}")]
    DomainViolation { value: f64, domain: String },

    #[error("non-finite value while evaluating {what}")]
    NonFinite { what: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("adaptive quadrature exceeded its budget of {budget} evaluations")]
    QuadratureFailure { budget: usize },

    #[error("value {value} is outside the numerically estimated range ({lower}, {upper})")]
    OutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("design matrix has rank {rank}, needs {needed}")]
    RankDeficient { rank: usize, needed: usize },

    #[error("solution diverged at step {step} (t = {time}): {reason}")]
    Divergence { step: usize, time: f64, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("terminal value {terminal} is below the obstacle {obstacle} on path {path}")]
    ObstacleIncompatible { path: usize, terminal: f64, obstacle: f64 },

    #[error("declared hypothesis does not hold: {0}")]
    HypothesisUnmet(String),

    #[error("backward ODE blows up even for the smallest probed horizon {horizon}")]
    NoExistence { horizon: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
