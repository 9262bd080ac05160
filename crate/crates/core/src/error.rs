use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("rows are linearly dependent")]
    DependentRows,

    #[error("vectors are already orthogonal")]
    AlreadyOrthogonal,

    #[error("no growth direction found after {samples} samples (best level excess {best_excess:e})")]
    NoGrowthDirection { samples: usize, best_excess: f64 },

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("value above level: P(F) - alpha = {0:e}")]
    AboveLevel(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
