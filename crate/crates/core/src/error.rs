use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("the game is already over")]
    GameOver,

    #[error("ante requires an empty pot (pot = {0})")]
    PotNotEmpty(i64),

    #[error("spin cap of {0} exceeded")]
    SpinCapExceeded(u64),

    #[error("not at an epoch boundary: {0}")]
    NotAtEpochBoundary(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("probability undefined: {0}")]
    Undefined(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("truncation did not stabilize: {0}")]
    Unstable(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
