use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::ACTION_DIM;
use crate::error::{Error, Result};
use crate::graph::{CollisionFreeGraph, InformativeGraph};
use crate::world::Cell;

/// Observation, prediction and action horizons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonConfig {
    pub obs: usize,
    pub pred: usize,
    pub action: usize,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        Self {
            obs: 2,
            pred: 8,
            action: 1,
        }
    }
}

impl HorizonConfig {
    /// Future steps in a decoded plan, `T_p − T_o + 1`.
    pub fn future(&self) -> usize {
        self.pred + 1 - self.obs
    }

    pub fn validate(&self) -> Result<()> {
        if self.obs == 0 || self.pred <= self.obs || self.action == 0 || self.action > self.future() {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= T_o < T_p and 1 <= T_a <= T_p - T_o + 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Neighbor selection in the 5×5 block: indices `0..5` per axis, `(2, 2)` is stay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionIndex {
    pub ix: u8,
    pub iy: u8,
}

impl ActionIndex {
    pub const STAY: ActionIndex = ActionIndex { ix: 2, iy: 2 };

    pub fn new(ix: u8, iy: u8) -> Self {
        assert!(ix < 5 && iy < 5, "action index out of range");
        Self { ix, iy }
    }

    /// Action moving from lattice cell `from` to `to`, if they are within one block.
    pub fn between(from: Cell, to: Cell, spacing: usize) -> Option<Self> {
        let s = spacing as i32;
        let (dx, dy) = (to.x - from.x, to.y - from.y);
        if dx % s != 0 || dy % s != 0 {
            return None;
        }
        let (ix, iy) = (dx / s + 2, dy / s + 2);
        ((0..5).contains(&ix) && (0..5).contains(&iy)).then(|| Self::new(ix as u8, iy as u8))
    }

    /// Lattice displacement in cells.
    pub fn offset(&self, spacing: usize) -> (i32, i32) {
        let s = spacing as i32;
        ((self.ix as i32 - 2) * s, (self.iy as i32 - 2) * s)
    }

    /// Two one-hot blocks of five.
    pub fn one_hot(&self) -> [f64; ACTION_DIM] {
        let mut v = [0.0; ACTION_DIM];
        v[self.ix as usize] = 1.0;
        v[5 + self.iy as usize] = 1.0;
        v
    }

    /// Block-wise argmax of a 10-value row (ties: lowest index).
    pub fn from_row(row: ArrayView1<'_, f64>) -> Self {
        let argmax = |lo: usize| {
            (0..5).fold(0usize, |best, i| if row[lo + i] > row[lo + best] { i } else { best }) as u8
        };
        Self {
            ix: argmax(0),
            iy: argmax(5),
        }
    }
}

/// `T_p × 10` one-hot matrix for a sequence of actions.
pub fn encode_actions(actions: &[ActionIndex]) -> Array2<f64> {
    let mut out = Array2::zeros((actions.len(), ACTION_DIM));
    for (r, a) in actions.iter().enumerate() {
        for (c, v) in a.one_hot().into_iter().enumerate() {
            out[[r, c]] = v;
        }
    }
    out
}

/// Turns a denoised sequence into `n` future lattice cells: drops the
/// `T_o − 1` past steps, takes block-wise argmaxes and accumulates the
/// displacements from the robot cell.
pub fn decode_actions(a0: &Array2<f64>, robot: Cell, spacing: usize, horizon: &HorizonConfig) -> Vec<Cell> {
    let mut cur = robot;
    a0.rows()
        .into_iter()
        .skip(horizon.obs - 1)
        .map(|row| {
            let (dx, dy) = ActionIndex::from_row(row).offset(spacing);
            cur = Cell::new(cur.x + dx, cur.y + dy);
            cur
        })
        .collect()
}

/// First step from node `from` toward `target`: the target itself when it is
/// a neighbor, else along the shortest path, else (target unknown or
/// unreachable) toward the nearest reachable node with positive utility.
fn step_from(graph: &InformativeGraph, from: usize, target: Cell) -> Result<usize> {
    let base = &graph.base;
    if let Some(t) = base.node_at(target) {
        if t == from || base.has_edge(from, t) {
            return Ok(t);
        }
        if let Some(p) = base.shortest_path(from, t) {
            return Ok(p.nodes[1]);
        }
    }
    let dist = base.distances_from(from);
    let goal = (0..graph.len())
        .filter(|&i| graph.utility[i] > 0 && dist[i].is_finite())
        .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
        .ok_or(Error::Stuck)?;
    if goal == from {
        return Ok(from);
    }
    let p = base.shortest_path(from, goal).ok_or(Error::NoPath { from, to: goal })?;
    Ok(p.nodes[1])
}

/// Makes the decoded plan executable on `G_t`.
///
/// Steps that follow an edge (or stay) are kept. At the first step that does
/// not, the step is replaced by the first move toward that planned cell (see
/// [`step_from`]) and the rest of the plan is dropped; if fewer than `T_a`
/// steps remain, further moves toward the same cell fill the action horizon.
pub fn repair_collisions(path: &[Cell], graph: &InformativeGraph, horizon: &HorizonConfig) -> Result<Vec<usize>> {
    let base: &CollisionFreeGraph = &graph.base;
    let start = graph.current();
    if base.neighbors(start).is_empty() {
        return Err(Error::Stuck);
    }
    let mut out = Vec::with_capacity(path.len());
    let mut cur = start;
    for &cell in path {
        match base.node_at(cell) {
            Some(j) if j == cur || base.has_edge(cur, j) => {
                out.push(j);
                cur = j;
            }
            _ => {
                loop {
                    let next = step_from(graph, cur, cell)?;
                    out.push(next);
                    if next == cur || out.len() >= horizon.action || base.cell(next) == cell {
                        break;
                    }
                    cur = next;
                }
                break;
            }
        }
    }
    Ok(out)
}
