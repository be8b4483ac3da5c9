use thiserror::Error;

/// Errors raised by the geometry, capacity, flow and product routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("point ({x}, {y}) is not on the boundary")]
    NotOnBoundary { x: f64, y: f64 },

    #[error("trajectory hit a corner at step {step}")]
    CornerHit { step: usize },

    #[error("normal cone of the moving point is not a single ray")]
    UndefinedCone,

    #[error("unfolding requires a Euclidean reflection at every bounce: {0}")]
    UnfoldUnsupported(String),

    #[error("no systolic-ratio crossing of 1 on the sweep: {0}")]
    NoCrossing(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn invalid_body(msg: impl Into<String>) -> Self {
        Error::InvalidBody(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
