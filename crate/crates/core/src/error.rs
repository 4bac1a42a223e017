use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("invalid {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    ProjectionNotConverged { iterations: usize, residual: f64 },

    #[error("rank {rank} is below the required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("objective became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("rejection sampling acceptance rate {rate:e} is too low; use the \"scale\" placement mode")]
    LowAcceptance { rate: f64 },

    #[error("row {0} of the estimate has zero norm")]
    DegenerateRow(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),
}
