use thiserror::Error;

use crate::domain::LadderViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid type ladder: {}", format_violations(.0))]
    InvalidLadder(Vec<LadderViolation>),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid beliefs: {0}")]
    InvalidBeliefs(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("closed-form solver needs exactly two CIs, got {0}")]
    NotTwoCi(usize),

    #[error("CIs are not sorted ascending by assigned composite type")]
    Unsorted,

    #[error("oracle grid has {0} points, limit is 1e8")]
    GridTooLarge(u128),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("active set is empty")]
    EmptyActiveSet,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_violations(v: &[LadderViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
