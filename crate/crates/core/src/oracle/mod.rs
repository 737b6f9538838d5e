//! Ground-truth coverage planner used to produce expert demonstrations.
//!
//! With the true map known, exploration reduces to coverage: choose graph
//! nodes from which every ground-truth frontier is observed, then visit them
//! along the shortest open tour. Covering sets are sampled with probability
//! proportional to the still-uncovered frontier count of each node; the best
//! tour over `restarts` samples wins.

mod tsp;

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use tsp::{solve_open_tsp, tour_cost, Tour, EXACT_LIMIT};

use crate::error::{Error, Result};
use crate::graph::{CollisionFreeGraph, Lattice};
use crate::world::{visible_cells, BeliefMap, Cell, GroundTruthMap, Knowledge, Point, SensorModel, Terrain};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Number of sampled covering sets `k`.
    pub restarts: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { restarts: 32 }
    }
}

/// Boundary of the unexplored free area `M_f − B_f`: unexplored free cells
/// with an 8-neighbor outside that area (explored, occupied or off-grid).
pub fn ground_truth_frontiers(truth: &GroundTruthMap, belief: &BeliefMap) -> Vec<Cell> {
    let unexplored = |c: Cell| truth.get(c) == Some(Terrain::Free) && belief.get(c) != Some(Knowledge::Free);
    truth
        .coords()
        .filter(|&c| unexplored(c) && c.neighbors8().any(|n| !unexplored(n)))
        .collect()
}

/// Frontiers the sensor would observe from `pose` on the ground truth.
pub fn observable_frontiers(pose: Point, frontiers: &[Cell], truth: &GroundTruthMap, sensor: &SensorModel) -> Vec<Cell> {
    if frontiers.is_empty() {
        return Vec::new();
    }
    let visible = visible_cells(truth, pose, sensor);
    frontiers
        .iter()
        .copied()
        .filter(|c| visible.binary_search_by_key(&(c.y, c.x), |v| (v.y, v.x)).is_ok())
        .collect()
}

/// One planning query against a [`GroundTruthOracle`].
#[derive(Clone, Debug)]
pub struct OracleProblem {
    /// Robot node in the ground-truth graph.
    pub robot: usize,
    pub frontiers: Vec<Cell>,
    pub restarts: usize,
    pub seed: u64,
}

/// Best coverage tour found.
#[derive(Clone, Debug, PartialEq)]
pub struct CoveragePlan {
    /// Waypoint nodes in visiting order, starting at the robot node.
    pub waypoints: Vec<usize>,
    /// Node-by-node route through the ground-truth graph.
    pub route: Vec<usize>,
    pub cost: f64,
    /// Best cost after each restart.
    pub best_history: Vec<f64>,
}

/// Per-environment precomputation: the ground-truth graph `G*`, each node's
/// visible cells and all-pairs graph distances.
#[derive(Clone, Debug)]
pub struct GroundTruthOracle {
    truth: GroundTruthMap,
    sensor: SensorModel,
    graph: CollisionFreeGraph,
    visible: Vec<Vec<Cell>>,
    dist: Vec<Vec<f64>>,
}

impl GroundTruthOracle {
    pub fn new(truth: &GroundTruthMap, start: Point, lattice: Lattice, sensor: SensorModel) -> Result<Self> {
        let known = BeliefMap::fully_known(truth);
        let graph = CollisionFreeGraph::build(&known, start, lattice)?;
        let visible = (0..graph.len())
            .map(|i| visible_cells(truth, graph.position(i), &sensor))
            .collect();
        let dist = (0..graph.len()).map(|i| graph.distances_from(i)).collect();
        Ok(Self {
            truth: truth.clone(),
            sensor,
            graph,
            visible,
            dist,
        })
    }

    pub fn graph(&self) -> &CollisionFreeGraph {
        &self.graph
    }

    pub fn truth(&self) -> &GroundTruthMap {
        &self.truth
    }

    pub fn sensor(&self) -> &SensorModel {
        &self.sensor
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a][b]
    }

    /// Cells observed when sensing from node `i`.
    pub fn visible_from(&self, i: usize) -> &[Cell] {
        &self.visible[i]
    }

    pub fn node_at(&self, c: Cell) -> Result<usize> {
        self.graph.node_at(c).ok_or(Error::InvalidPose(c))
    }

    /// Per-node coverage bitsets over `frontiers`.
    fn covers(&self, frontiers: &[Cell]) -> Vec<FixedBitSet> {
        let index: HashMap<Cell, usize> = frontiers.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        self.visible
            .iter()
            .map(|vis| {
                let mut bits = FixedBitSet::with_capacity(frontiers.len());
                for c in vis {
                    if let Some(&k) = index.get(c) {
                        bits.insert(k);
                    }
                }
                bits
            })
            .collect()
    }

    /// Draws one covering waypoint set (robot node first).
    pub fn sample_covering_set(&self, problem: &OracleProblem, rng: &mut impl Rng) -> Result<Vec<usize>> {
        let covers = self.covers(&problem.frontiers);
        self.sample_with(problem, &covers, rng)
    }

    fn sample_with(&self, problem: &OracleProblem, covers: &[FixedBitSet], rng: &mut impl Rng) -> Result<Vec<usize>> {
        let n_frontiers = problem.frontiers.len();
        let reachable: Vec<usize> = (0..self.graph.len())
            .filter(|&j| j != problem.robot && self.dist[problem.robot][j].is_finite())
            .collect();
        let mut remaining = FixedBitSet::with_capacity(n_frontiers);
        remaining.insert_range(..);
        remaining.difference_with(&covers[problem.robot]);

        let mut coverable = covers[problem.robot].clone();
        for &j in &reachable {
            coverable.union_with(&covers[j]);
        }
        if let Some(k) = (0..n_frontiers).find(|&k| !coverable.contains(k)) {
            return Err(Error::UncoverableFrontier(problem.frontiers[k]));
        }

        let mut waypoints = vec![problem.robot];
        let mut queue = reachable;
        let mut weights = vec![0usize; queue.len()];
        while !remaining.is_clear() {
            let mut total = 0usize;
            for (w, &j) in weights.iter_mut().zip(&queue) {
                *w = covers[j].intersection_count(&remaining);
                total += *w;
            }
            debug_assert!(total > 0, "coverability was checked up front");
            let mut pick = rng.random_range(0..total);
            let slot = weights
                .iter()
                .position(|&w| {
                    if pick < w {
                        true
                    } else {
                        pick -= w;
                        false
                    }
                })
                .expect("pick falls inside the total weight");
            let node = queue.remove(slot);
            weights.pop();
            remaining.difference_with(&covers[node]);
            waypoints.push(node);
        }
        Ok(waypoints)
    }

    /// Open TSP over `waypoints` (first element is the start) using graph distances.
    pub fn solve_tsp(&self, waypoints: &[usize]) -> Result<Tour> {
        let dist: Vec<Vec<f64>> = waypoints
            .iter()
            .map(|&a| waypoints.iter().map(|&b| self.dist[a][b]).collect())
            .collect();
        let local = solve_open_tsp(&dist, 0).map_err(|e| match e {
            Error::NoPath { from, to } => Error::NoPath {
                from: waypoints[from],
                to: waypoints[to],
            },
            other => other,
        })?;
        Ok(Tour {
            order: local.order.iter().map(|&i| waypoints[i]).collect(),
            cost: local.cost,
        })
    }

    /// Samples `restarts` covering sets, keeps the cheapest tour and expands
    /// it into a node-by-node route.
    pub fn plan_coverage(&self, problem: &OracleProblem) -> Result<CoveragePlan> {
        let covers = self.covers(&problem.frontiers);
        let mut best: Option<Tour> = None;
        let mut best_history = Vec::with_capacity(problem.restarts);
        for r in 0..problem.restarts.max(1) {
            let mut rng = restart_rng(problem.seed, r);
            let set = self.sample_with(problem, &covers, &mut rng)?;
            let tour = self.solve_tsp(&set)?;
            if best.as_ref().is_none_or(|b| tour.cost < b.cost) {
                best = Some(tour);
            }
            best_history.push(best.as_ref().map_or(f64::INFINITY, |b| b.cost));
            if problem.frontiers.is_empty() {
                break;
            }
        }
        let best = best.expect("at least one restart ran");
        let route = self.expand(&best.order)?;
        Ok(CoveragePlan {
            waypoints: best.order,
            route,
            cost: best.cost,
            best_history,
        })
    }

    fn expand(&self, order: &[usize]) -> Result<Vec<usize>> {
        let mut route = vec![order[0]];
        for w in order.windows(2) {
            let leg = self
                .graph
                .shortest_path(w[0], w[1])
                .ok_or(Error::NoPath { from: w[0], to: w[1] })?;
            route.extend_from_slice(&leg.nodes[1..]);
        }
        Ok(route)
    }
}

/// Independent stream per restart so restarts could run in any order.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Terrain;

    fn room(n: usize) -> GroundTruthMap {
        let mut m = GroundTruthMap::filled(n, n, 0.4, Terrain::Occupied);
        for y in 1..n as i32 - 1 {
            for x in 1..n as i32 - 1 {
                m.set(Cell::new(x, y), Terrain::Free);
            }
        }
        m
    }

    #[test]
    fn empty_frontier_set_plans_nothing() {
        let truth = room(20);
        let start = truth.cell_center(Cell::new(6, 6));
        let oracle = GroundTruthOracle::new(&truth, start, Lattice::default(), SensorModel::default()).unwrap();
        assert!(observable_frontiers(start, &[], &truth, oracle.sensor()).is_empty());
        let robot = oracle.node_at(Cell::new(6, 6)).unwrap();
        let problem = OracleProblem {
            robot,
            frontiers: vec![],
            restarts: 8,
            seed: 1,
        };
        let mut rng = restart_rng(1, 0);
        assert_eq!(oracle.sample_covering_set(&problem, &mut rng).unwrap(), vec![robot]);
        let plan = oracle.plan_coverage(&problem).unwrap();
        assert_eq!(plan.route, vec![robot]);
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn far_frontier_is_not_observable() {
        let truth = room(64);
        let pose = truth.cell_center(Cell::new(6, 6));
        let far = Cell::new(50, 50);
        assert!(observable_frontiers(pose, &[far], &truth, &SensorModel::default()).is_empty());
        let near = Cell::new(8, 6);
        assert_eq!(observable_frontiers(pose, &[near, far], &truth, &SensorModel::default()), vec![near]);
    }

    #[test]
    fn frontiers_visible_from_start_need_no_motion() {
        let truth = room(20);
        let start = truth.cell_center(Cell::new(6, 6));
        let oracle = GroundTruthOracle::new(&truth, start, Lattice::default(), SensorModel::default()).unwrap();
        let robot = oracle.node_at(Cell::new(6, 6)).unwrap();
        let problem = OracleProblem {
            robot,
            frontiers: vec![Cell::new(7, 6), Cell::new(6, 9)],
            restarts: 4,
            seed: 3,
        };
        let plan = oracle.plan_coverage(&problem).unwrap();
        assert_eq!(plan.route, vec![robot]);
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn unreachable_frontier_is_reported() {
        let mut truth = room(30);
        // wall off the right part; its free cells have no reachable observer
        for y in 1..29 {
            truth.set(Cell::new(20, y), Terrain::Occupied);
        }
        let start = truth.cell_center(Cell::new(6, 6));
        let oracle = GroundTruthOracle::new(&truth, start, Lattice::default(), SensorModel::default()).unwrap();
        let robot = oracle.node_at(Cell::new(6, 6)).unwrap();
        let hidden = Cell::new(27, 27);
        let problem = OracleProblem {
            robot,
            frontiers: vec![hidden],
            restarts: 2,
            seed: 0,
        };
        match oracle.plan_coverage(&problem) {
            Err(Error::UncoverableFrontier(c)) => assert_eq!(c, hidden),
            other => panic!("expected uncoverable frontier, got {other:?}"),
        }
    }
}
