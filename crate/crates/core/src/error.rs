use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid resolution: need at least 2 cells, got {0}")]
    InvalidResolution(usize),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point {0} lies outside the domain")]
    OutOfDomain(f64),
    #[error("empty interval")]
    EmptySet,
    #[error("empty source set")]
    EmptySource,
    #[error("integration failed: non-finite state at t = {t} (started from {x0})")]
    IntegrationFailure { x0: f64, t: f64 },
    #[error("jump cutoff {c_max} is smaller than the cell width {h}")]
    CutoffTooSmall { c_max: f64, h: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("set is not invariant under the relation layer ({0} cells escape its collar)")]
    NotInvariant(usize),
    #[error("malformed graph dump: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
