//! Collision-free lattice graphs over the known free space and their
//! informative annotations.

mod informative;
mod path;

use std::collections::HashMap;

pub use informative::{annotate, revealable_cells, InformativeGraph};
pub use path::GraphPath;

use crate::error::{Error, Result};
use crate::world::{supercover_line, BeliefMap, Cell, Point};

/// Node lattice in cell units: nodes sit on cells `(offset + i·spacing, offset + j·spacing)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Lattice {
    pub spacing: usize,
    pub offset: usize,
}

impl Default for Lattice {
    fn default() -> Self {
        Self { spacing: 4, offset: 2 }
    }
}

impl Lattice {
    pub fn contains(&self, c: Cell) -> bool {
        let (s, o) = (self.spacing as i32, self.offset as i32);
        c.x >= 0 && c.y >= 0 && (c.x - o).rem_euclid(s) == 0 && (c.y - o).rem_euclid(s) == 0
    }

    /// The lattice cell closest to `c` (ties toward lower coordinates).
    pub fn snap(&self, c: Cell) -> Cell {
        let (s, o) = (self.spacing as i32, self.offset as i32);
        let snap1 = |v: i32| {
            let k = ((v - o) as f64 / s as f64).round() as i32;
            o + k.max(0) * s
        };
        Cell::new(snap1(c.x), snap1(c.y))
    }

    /// Whether two cells are within one 5×5 lattice block of each other.
    pub fn in_block(&self, a: Cell, b: Cell) -> bool {
        let r = 2 * self.spacing as i32;
        (a.x - b.x).abs() <= r && (a.y - b.y).abs() <= r
    }
}

/// `true` iff every cell touched by the segment between the centers of the
/// cells containing `a` and `b` is known Free. Unknown blocks sight.
pub fn line_of_sight(belief: &BeliefMap, a: Point, b: Point) -> bool {
    cells_in_sight(belief, belief.cell_at(a), belief.cell_at(b))
}

/// Cell-center form of [`line_of_sight`].
pub fn cells_in_sight(belief: &BeliefMap, a: Cell, b: Cell) -> bool {
    supercover_line(a, b).into_iter().all(|c| belief.is_free(c))
}

/// The graph `G_t`: lattice nodes in known free space joined by straight,
/// collision-free edges inside each node's 5×5 lattice block.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionFreeGraph {
    lattice: Lattice,
    resolution: f64,
    nodes: Vec<Cell>,
    index: HashMap<Cell, usize>,
    /// Sorted by neighbor index; lengths in meters.
    adjacency: Vec<Vec<(usize, f64)>>,
    current: usize,
}

impl CollisionFreeGraph {
    /// Builds `G_t` from the belief. Nodes are ordered row-major by cell; a
    /// robot standing off the lattice gets its own node at its exact cell.
    pub fn build(belief: &BeliefMap, robot: Point, lattice: Lattice) -> Result<Self> {
        let robot_cell = belief.cell_at(robot);
        if !belief.is_free(robot_cell) {
            return Err(Error::InvalidPose(robot_cell));
        }
        let mut nodes: Vec<Cell> = belief
            .coords()
            .filter(|&c| lattice.contains(c) && belief.is_free(c))
            .collect();
        if !lattice.contains(robot_cell) {
            let at = nodes.partition_point(|c| (c.y, c.x) < (robot_cell.y, robot_cell.x));
            nodes.insert(at, robot_cell);
        }
        let index: HashMap<Cell, usize> = nodes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let res = belief.resolution();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                let (a, b) = (nodes[i], nodes[j]);
                if lattice.in_block(a, b) && cells_in_sight(belief, a, b) {
                    let len = ((a.x - b.x) as f64).hypot((a.y - b.y) as f64) * res;
                    adjacency[i].push((j, len));
                    adjacency[j].push((i, len));
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(j, _)| j);
        }
        let current = index[&robot_cell];
        Ok(Self {
            lattice,
            resolution: res,
            nodes,
            index,
            adjacency,
            current,
        })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Node spacing `d_n` in meters.
    pub fn node_resolution(&self) -> f64 {
        self.lattice.spacing as f64 * self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node at the robot position.
    pub fn current(&self) -> usize {
        self.current
    }

    pub fn cell(&self, i: usize) -> Cell {
        self.nodes[i]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.nodes
    }

    pub fn position(&self, i: usize) -> Point {
        let c = self.nodes[i];
        Point::new(
            (c.x as f64 + 0.5) * self.resolution,
            (c.y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn node_at(&self, c: Cell) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search_by_key(&j, |&(n, _)| n).is_ok()
    }

    pub fn edge_length(&self, i: usize, j: usize) -> Option<f64> {
        let adj = &self.adjacency[i];
        adj.binary_search_by_key(&j, |&(n, _)| n).ok().map(|k| adj[k].1)
    }

    /// Undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&(j, _)| j > i).map(move |&(j, _)| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}
