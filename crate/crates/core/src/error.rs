use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidSpec(String),

    #[error("cannot parse architecture identifier {id:?}: {reason}")]
    ParseArch { id: String, reason: String },

    #[error("input has dimension {got}, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in layer {layer} ({stage})")]
    NonFinite { layer: usize, stage: &'static str },

    #[error(
        "grid of {points} points exceeds the budget of {budget}; \
         use corner-traversal sampling for high-dimensional inputs"
    )]
    GridTooLarge { points: u128, budget: usize },

    #[error("unsupported input dimension {dim} for {measure} (expected 1 or 2)")]
    UnsupportedDimension { dim: usize, measure: &'static str },

    #[error("{basis} basis is numerically unstable beyond order {limit} (requested {requested})")]
    UnstableBasis { basis: &'static str, limit: usize, requested: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at iteration {iteration} (parameter norm {param_norm:e})")]
    Diverged { iteration: usize, param_norm: f64 },

    #[error("malformed {kind} file: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures caused by the numbers themselves (overflow,
    /// divergence) rather than by configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Diverged { .. })
    }
}
