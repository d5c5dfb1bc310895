use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("network graph is disconnected: nodes {isolated:?} cannot reach the slack node {slack}")]
    Disconnected { slack: usize, isolated: Vec<usize> },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("device {device} is a unit-commitment generator without a fixed commitment; resolve it with solve_uc first")]
    UnresolvedCommitment { device: usize },

    #[error("exhaustive commitment search refused: {patterns_log2} binary decisions exceed the limit of {limit}")]
    CombinatorialGuard { patterns_log2: usize, limit: usize },

    #[error("solver did not reach an optimal point: {0}")]
    Solver(String),

    #[error("KKT Jacobian is singular; linearly dependent constraint rows {rows:?}")]
    SingularJacobian { rows: Vec<String> },

    #[error("finite-difference re-solve failed for period {period}, node {node} ({sign}): {reason}")]
    FiniteDifference {
        period: usize,
        node: usize,
        sign: char,
        reason: String,
    },

    #[error("pinned dynamic schedule is infeasible in the static restriction: {0}")]
    StaticRestriction(String),

    #[error("median |LME| of the reference series is zero; report the deviation unnormalized instead")]
    ZeroMedian,

    #[error("normalizer is zero: {0}")]
    ZeroNormalizer(String),

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
