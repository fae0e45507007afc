use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resolution: {0}")]
    Resolution(String),

    #[error("non-finite value at node {node}: {msg}")]
    Numeric { node: usize, msg: String },

    #[error("metric is not positive definite at {point:?}")]
    DegenerateMetric { point: Vec<f64> },

    #[error("trajectory left the chart at t = {time}")]
    DomainEscape { time: f64, point: Vec<f64> },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid connection: {0}")]
    InvalidConnection(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GeomError {
    GeomError::InvalidArgument(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> GeomError {
    GeomError::Precondition(msg.into())
}
