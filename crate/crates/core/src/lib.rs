//! Graph-based autonomous exploration on 2D occupancy grids.
//!
//! The crate bundles a procedural world simulator, lattice belief graphs,
//! a ground-truth coverage oracle, greedy frontier baselines and a
//! diffusion path policy conditioned on an attention graph encoder.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod diffusion;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod nn;
pub mod oracle;
pub mod sim;
pub mod training;
pub mod world;

pub use error::{Error, Result};
