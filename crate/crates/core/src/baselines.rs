//! Greedy frontier baselines: go to the nearest informative node, or to the
//! node with the best distance-discounted utility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InformativeGraph;
use crate::world::Cell;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityConfig {
    /// Distance discount per lattice step.
    pub lambda: f64,
}

impl Default for UtilityConfig {
    fn default() -> Self {
        Self { lambda: 0.1 }
    }
}

/// Reachable node with positive utility at minimal graph distance (ties:
/// smallest index).
pub fn nearest_target(graph: &InformativeGraph) -> Option<usize> {
    let dist = graph.base.distances_from(graph.current());
    (0..graph.len())
        .filter(|&i| graph.utility[i] > 0 && dist[i].is_finite())
        .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
}

/// Node maximizing `u · exp(−λ · dist / d_n)` (ties: smallest index).
pub fn utility_target(graph: &InformativeGraph, cfg: &UtilityConfig) -> Option<usize> {
    let dist = graph.base.distances_from(graph.current());
    let dn = graph.base.node_resolution();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..graph.len() {
        if graph.utility[i] == 0 || !dist[i].is_finite() {
            continue;
        }
        let score = graph.utility[i] as f64 * (-cfg.lambda * dist[i] / dn).exp();
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// First node on the shortest path from the robot to `target`.
pub fn first_step(graph: &InformativeGraph, target: usize) -> Result<usize> {
    let from = graph.current();
    if target == from {
        return Ok(from);
    }
    let path = graph.base.shortest_path(from, target).ok_or(Error::NoPath { from, to: target })?;
    Ok(path.nodes[1])
}

/// One step toward the lattice cell `target`: the target itself when it is a
/// graph neighbor, else the first step of the shortest path to it, else (not
/// a reachable node) the first step toward the nearest informative node.
pub fn step_toward(graph: &InformativeGraph, target: Cell) -> Result<usize> {
    let from = graph.current();
    if let Some(t) = graph.base.node_at(target) {
        if t == from || graph.base.has_edge(from, t) {
            return Ok(t);
        }
        if let Some(path) = graph.base.shortest_path(from, t) {
            return Ok(path.nodes[1]);
        }
    }
    nearest_frontier(graph)
}

/// Next waypoint of the nearest-frontier planner.
pub fn nearest_frontier(graph: &InformativeGraph) -> Result<usize> {
    first_step(graph, nearest_target(graph).ok_or(Error::Stuck)?)
}

/// Next waypoint of the utility planner.
pub fn utility_planner(graph: &InformativeGraph, cfg: &UtilityConfig) -> Result<usize> {
    first_step(graph, utility_target(graph, cfg).ok_or(Error::Stuck)?)
}
