use thiserror::Error;

use crate::tree::NodeId;

/// Errors raised by construction and by operation preconditions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid filtration tree: {0}")]
    InvalidTree(String),
    #[error("tree has cemetery level {tree}, grid has cemetery level {grid}")]
    GridMismatch { tree: usize, grid: usize },
    #[error("process has {got} values, tree has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("level {level} out of range (cemetery level {cemetery})")]
    LevelOutOfRange { level: usize, cemetery: usize },
    #[error("stopping times out of order: the later one stops before the earlier one at node {node}")]
    StoppingOrder { node: NodeId },
    #[error("stopping time stops at node {node}, which is neither weighted nor the cemetery")]
    UnweightedStop { node: NodeId },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("process is not a supermartingale: violation {violation} at node {node}")]
    NotSupermartingale { node: NodeId, violation: f64 },
    #[error("not a decomposition: M - A differs from the process by {gap} at node {node}")]
    NotDecomposition { node: NodeId, gap: f64 },
    #[error("sandwich violated at node {node}: {detail}")]
    Sandwich { node: NodeId, detail: String },
    #[error("process leaves the admissible set at node {node}: {value} < obstacle {obstacle}")]
    OutsideAdmissible { node: NodeId, value: f64, obstacle: f64 },
    #[error("penalization did not converge: last gap {gap} at beta {beta}, cross-check distance {distance}")]
    NonConvergence { beta: f64, gap: f64, distance: f64 },
    #[error("value iteration did not converge within {iterations} sweeps (last change {change})")]
    IterationCap { iterations: usize, change: f64 },
    #[error("stopping time enumeration would produce {count} labelings, cap is {cap}")]
    CapExceeded { count: u128, cap: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
