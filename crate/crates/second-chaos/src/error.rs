use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("quadrature node cap exceeded: {requested} nodes > cap {cap}")]
    NodeCapExceeded { requested: usize, cap: usize },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("density is negative at a probed point: L({point:?}) = {value}")]
    NegativeDensity { point: Vec<f64>, value: f64 },

    #[error("density has non-positive mass {mass}")]
    NonPositiveMass { mass: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eig})")]
    NotPositiveSemiDefinite { min_eig: f64 },

    #[error("transport map is not invertible on the probed region: {reason}")]
    NonInvertibleMap { reason: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config error in {path}: {reason}")]
    Config { path: String, reason: String },

    #[error("{0}")]
    Unsupported(String),
}

impl EngineError {
    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        EngineError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        EngineError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, EngineError>;
