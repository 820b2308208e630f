use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate bus id {0}")]
    DuplicateBus(usize),

    #[error("case has no slack bus")]
    MissingSlack,

    #[error("case has {0} slack buses, expected exactly one")]
    MultipleSlack(usize),

    #[error("branch {branch} references unknown bus {bus}")]
    DanglingEndpoint { branch: usize, bus: usize },

    #[error("invalid branch {branch}: {reason}")]
    InvalidBranch { branch: usize, reason: String },

    #[error("invalid bus {bus}: {reason}")]
    InvalidBus { bus: usize, reason: String },

    #[error("branch index {index} out of range (case has {count} branches)")]
    BranchIndex { index: usize, count: usize },

    #[error("branch {0} is already out of service")]
    BranchOutOfService(usize),

    #[error("branch {0} has zero impedance")]
    ZeroImpedance(usize),

    #[error("network is not connected")]
    Disconnected,

    #[error("power flow did not converge after {iterations} iterations (max mismatch {max_mismatch:.3e} pu)")]
    NotConverged { iterations: usize, max_mismatch: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("bus {0} is not observed by any PMU")]
    UncoveredBus(usize),

    #[error("measurement matrix is rank deficient (rank {rank}, {states} states)")]
    RankDeficient { rank: usize, states: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("{failed} power-flow scenarios failed, more than the allowed {cap}")]
    RedrawCapExceeded { failed: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("artifact mismatch: {0}")]
    Mismatch(String),

    #[error("invalid file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
