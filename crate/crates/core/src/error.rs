use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("component {row} has zero variance")]
    DegenerateComponent { row: usize },

    #[error("grid spacing {spacing:.4e} exceeds limit {limit:.4e} (sigma / 2)")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("singular system: condition number {condition:.3e} (use lambda > 0)")]
    SingularSystem { condition: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("estimator failed at theta = {theta:.6}: {source}")]
    AtAngle {
        theta: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Strips any `AtAngle` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtAngle { source, .. } => source.root(),
            other => other,
        }
    }
}
