use std::path::PathBuf;

use crate::world::Cell;

/// Errors surfaced by the exploration workbench.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid pose at cell ({}, {}): not a known free cell", .0.x, .0.y)]
    InvalidPose(Cell),

    #[error("dungeon generation failed for seed {seed} after {attempts} attempts: {reason}")]
    GenerationFailed {
        seed: u64,
        attempts: usize,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("frontier cell ({}, {}) is not observable from any graph node", .0.x, .0.y)]
    UncoverableFrontier(Cell),

    #[error("no path between graph nodes {from} and {to}")]
    NoPath { from: usize, to: usize },

    #[error("no reachable node with positive utility")]
    Stuck,

    #[error("move from node {from} to node {to} does not follow a graph edge")]
    IllegalMove { from: usize, to: usize },

    #[error("non-finite value produced at denoising step {0}")]
    NumericFailure(usize),

    #[error("demonstration for seed {seed} rejected: {reason}")]
    Rejected { seed: u64, reason: String },

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("malformed {what} in {path:?}: {reason}")]
    Format {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
