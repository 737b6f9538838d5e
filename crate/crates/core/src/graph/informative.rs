use std::collections::HashSet;
use std::fmt::Write as _;

use super::path::LENGTH_EPS;
use super::CollisionFreeGraph;
use crate::world::{cast_rays, BeliefMap, Cell, Knowledge, Point, RayStep, SensorModel};

/// `G'_t`: the collision-free graph plus per-node utility, guidepost and
/// robot-occupancy annotations. Coordinates and edges are those of `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct InformativeGraph {
    pub base: CollisionFreeGraph,
    /// Number of frontier cells the sensor could resolve from each node.
    pub utility: Vec<u32>,
    /// Nodes on a shortest path from the robot to its nearest informative node.
    pub guidepost: Vec<bool>,
}

impl InformativeGraph {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn current(&self) -> usize {
        self.base.current()
    }

    pub fn occupancy(&self, i: usize) -> bool {
        i == self.base.current()
    }

    pub fn has_informative_node(&self) -> bool {
        self.utility.iter().any(|&u| u > 0)
    }

    /// Text dump: one `node x y u b occ` line per node (meters), then one
    /// `edge i j` line per undirected edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let p = self.base.position(i);
            let _ = writeln!(
                out,
                "node {:.3} {:.3} {} {} {}",
                p.x,
                p.y,
                self.utility[i],
                u8::from(self.guidepost[i]),
                u8::from(self.occupancy(i))
            );
        }
        for (i, j) in self.base.edges() {
            let _ = writeln!(out, "edge {i} {j}");
        }
        out
    }
}

/// Unknown cells at which sensor rays cast over the belief from `pose` first
/// leave known free space. Sensing from `pose` is guaranteed to reveal every
/// one of them, and after sensing there none remain.
pub fn revealable_cells(belief: &BeliefMap, pose: Point, sensor: &SensorModel) -> HashSet<Cell> {
    let mut out = HashSet::new();
    cast_rays(belief, pose, sensor, |c, k| match k {
        Knowledge::Free => RayStep::Continue,
        Knowledge::Occupied => RayStep::Stop,
        Knowledge::Unknown => {
            out.insert(c);
            RayStep::Stop
        }
    });
    out
}

/// Annotates `graph` with utilities and guideposts.
///
/// A frontier cell counts toward a node's utility when it lies within sensor
/// range of the node and one of its Unknown 8-neighbors is revealable from
/// the node (see [`revealable_cells`]), so a node's utility drops to zero
/// once the robot has sensed from it.
pub fn annotate(
    graph: CollisionFreeGraph,
    belief: &BeliefMap,
    frontiers: &[Cell],
    sensor: &SensorModel,
) -> InformativeGraph {
    let frontier_set: HashSet<Cell> = frontiers.iter().copied().collect();
    let res = belief.resolution();
    let reach = sensor.range / res;
    let utility: Vec<u32> = (0..graph.len())
        .map(|i| {
            if frontier_set.is_empty() {
                return 0;
            }
            let node = graph.cell(i);
            let revealable = revealable_cells(belief, graph.position(i), sensor);
            let mut counted = HashSet::new();
            for r in &revealable {
                for f in r.neighbors8() {
                    let d = ((f.x - node.x) as f64).hypot((f.y - node.y) as f64);
                    if d <= reach && frontier_set.contains(&f) {
                        counted.insert(f);
                    }
                }
            }
            counted.len() as u32
        })
        .collect();
    let guidepost = guideposts(&graph, &utility);
    InformativeGraph {
        base: graph,
        utility,
        guidepost,
    }
}

/// Marks every node lying on some shortest path from the robot node to the
/// nearest reachable node with positive utility (ties: smallest index).
fn guideposts(graph: &CollisionFreeGraph, utility: &[u32]) -> Vec<bool> {
    let mut marks = vec![false; graph.len()];
    let from_robot = graph.distances_from(graph.current());
    let target = (0..graph.len())
        .filter(|&i| utility[i] > 0 && from_robot[i].is_finite())
        .min_by(|&a, &b| from_robot[a].total_cmp(&from_robot[b]).then(a.cmp(&b)));
    let Some(target) = target else {
        return marks;
    };
    let from_target = graph.distances_from(target);
    let best = from_robot[target];
    for i in 0..graph.len() {
        marks[i] = from_robot[i] + from_target[i] <= best + LENGTH_EPS;
    }
    marks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Lattice;
    use crate::world::detect_frontiers;

    #[test]
    fn no_frontiers_means_no_utility_or_guideposts() {
        let mut b = BeliefMap::filled(20, 20, 0.4, Knowledge::Occupied);
        for y in 1..19 {
            for x in 1..19 {
                b.set(Cell::new(x, y), Knowledge::Free);
            }
        }
        let g = CollisionFreeGraph::build(&b, b.cell_center(Cell::new(6, 6)), Lattice::default()).unwrap();
        let ig = annotate(g, &b, &detect_frontiers(&b), &SensorModel::default());
        assert!(ig.utility.iter().all(|&u| u == 0));
        assert!(ig.guidepost.iter().all(|&g| !g));
        assert!(ig.occupancy(ig.current()));
        assert_eq!((0..ig.len()).filter(|&i| ig.occupancy(i)).count(), 1);
    }

    #[test]
    fn single_frontier_next_to_isolated_node() {
        // free pocket around (6,6) with a one-cell nook at (8,6) facing Unknown (9,6)
        let mut b = BeliefMap::filled(16, 16, 0.4, Knowledge::Occupied);
        for y in 5..8 {
            for x in 5..8 {
                b.set(Cell::new(x, y), Knowledge::Free);
            }
        }
        b.set(Cell::new(8, 6), Knowledge::Free);
        b.set(Cell::new(9, 6), Knowledge::Unknown);
        let frontiers = detect_frontiers(&b);
        assert_eq!(frontiers, vec![Cell::new(8, 6)]);
        let g = CollisionFreeGraph::build(&b, b.cell_center(Cell::new(6, 6)), Lattice::default()).unwrap();
        assert_eq!(g.len(), 1);
        let ig = annotate(g, &b, &frontiers, &SensorModel::default());
        assert_eq!(ig.utility, vec![1]);
        assert_eq!(ig.guidepost, vec![true]);
    }

    #[test]
    fn dump_lists_nodes_then_edges() {
        let mut b = BeliefMap::filled(12, 5, 0.5, Knowledge::Occupied);
        for x in 1..11 {
            b.set(Cell::new(x, 2), Knowledge::Free);
        }
        let g = CollisionFreeGraph::build(&b, b.cell_center(Cell::new(2, 2)), Lattice::default()).unwrap();
        let ig = annotate(g, &b, &[], &SensorModel::default());
        assert_eq!(ig.dump(), "node 1.250 1.250 0 0 1\nnode 3.250 1.250 0 0 0\nnode 5.250 1.250 0 0 0\nedge 0 1\nedge 0 2\nedge 1 2\n");
    }
}
