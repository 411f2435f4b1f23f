use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyGraph,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("partition plan integrity: {0}")]
    PlanIntegrity(String),

    #[error("no live entities left to range over")]
    DegenerateRange,

    #[error("instance too large for brute-force oracle: {work} pair scans (limit {limit})")]
    OracleGuard { work: u128, limit: u128 },

    #[error("predicted BE-Index size {predicted} bytes exceeds memory budget {budget} bytes")]
    IndexBudget { predicted: u64, budget: u64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
