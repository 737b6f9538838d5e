//! Environments and the receding-horizon episode state shared by every planner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{annotate, CollisionFreeGraph, InformativeGraph, Lattice};
use crate::oracle::{ground_truth_frontiers, GroundTruthOracle, OracleConfig, OracleProblem};
use crate::world::{
    detect_frontiers, generate_dungeon, is_complete, sense, BeliefMap, Cell, DungeonParams, GroundTruthMap, SensorModel,
};

/// Everything needed to turn a seed into an environment and run it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub width: usize,
    pub height: usize,
    pub dungeon: DungeonParams,
    pub sensor: SensorModel,
    pub oracle: OracleConfig,
    /// Step budget as a multiple of the oracle's initial plan length in lattice steps.
    pub budget_factor: f64,
    /// Maps rejected as unsolvable before giving up on a seed.
    pub max_resamples: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            dungeon: DungeonParams::default(),
            sensor: SensorModel::default(),
            oracle: OracleConfig::default(),
            budget_factor: 4.0,
            max_resamples: 16,
        }
    }
}

impl SimConfig {
    pub fn lattice(&self) -> Lattice {
        Lattice {
            spacing: self.dungeon.lattice_spacing,
            offset: self.dungeon.lattice_offset,
        }
    }

    /// Node spacing `d_n` in meters.
    pub fn node_resolution(&self) -> f64 {
        self.dungeon.lattice_spacing as f64 * self.dungeon.resolution
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        if self.oracle.restarts == 0 {
            return Err(Error::InvalidConfig("oracle needs at least one restart".into()));
        }
        if !(self.budget_factor > 0.0) {
            return Err(Error::InvalidConfig("budget factor must be positive".into()));
        }
        Ok(())
    }
}

/// A solvable ground-truth map with its start cell and oracle precomputation.
#[derive(Clone, Debug)]
pub struct Environment {
    pub seed: u64,
    pub truth: GroundTruthMap,
    pub start: Cell,
    pub oracle: GroundTruthOracle,
}

impl Environment {
    /// Builds the environment for `seed`. Maps where some free cell cannot be
    /// seen from any lattice node are resampled from a derived seed.
    pub fn generate(seed: u64, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let mut reason = String::new();
        for attempt in 0..=cfg.max_resamples {
            let map_seed = if attempt == 0 { seed } else { derive_seed(seed, attempt as u64) };
            let truth = generate_dungeon(map_seed, cfg.width, cfg.height, &cfg.dungeon)?;
            match Self::from_map(seed, truth, cfg) {
                Ok(env) => return Ok(env),
                Err(e) => reason = e.to_string(),
            }
        }
        Err(Error::GenerationFailed {
            seed,
            attempts: cfg.max_resamples + 1,
            reason,
        })
    }

    /// Wraps an existing map; the start cell is drawn from `seed`.
    pub fn from_map(seed: u64, truth: GroundTruthMap, cfg: &SimConfig) -> Result<Self> {
        let lattice = cfg.lattice();
        let candidates: Vec<Cell> = truth.coords().filter(|&c| lattice.contains(c) && truth.is_free(c)).collect();
        if candidates.is_empty() {
            return Err(Error::InvalidConfig("map has no free lattice cell".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let start = candidates[rng.random_range(0..candidates.len())];
        Self::with_start(seed, truth, start, cfg)
    }

    pub fn with_start(seed: u64, truth: GroundTruthMap, start: Cell, cfg: &SimConfig) -> Result<Self> {
        let oracle = GroundTruthOracle::new(&truth, truth.cell_center(start), cfg.lattice(), cfg.sensor)?;
        if let Some(c) = unobservable_cell(&oracle) {
            return Err(Error::UncoverableFrontier(c));
        }
        Ok(Self {
            seed,
            truth,
            start,
            oracle,
        })
    }

    /// Oracle plan length (meters) from the first sensed belief.
    pub fn initial_plan_cost(&self, cfg: &SimConfig) -> Result<f64> {
        let ep = Episode::new(self, cfg)?;
        let problem = ep.oracle_problem(cfg.oracle.restarts, self.seed)?;
        Ok(self.oracle.plan_coverage(&problem)?.cost)
    }

    /// Executed-step limit for an episode.
    pub fn step_budget(&self, cfg: &SimConfig) -> Result<usize> {
        let cost = self.initial_plan_cost(cfg)?;
        Ok(((cfg.budget_factor * cost / cfg.node_resolution()).ceil() as usize).max(1))
    }
}

/// First free cell (row-major) that no reachable ground-truth node observes.
pub fn unobservable_cell(oracle: &GroundTruthOracle) -> Option<Cell> {
    let truth = oracle.truth();
    let graph = oracle.graph();
    let mut seen = BeliefMap::unknown_like(truth);
    for i in 0..graph.len() {
        if oracle.distance(graph.current(), i).is_finite() {
            for &c in oracle.visible_from(i) {
                seen.set(c, crate::world::Knowledge::Free);
            }
        }
    }
    truth.coords().find(|&c| truth.is_free(c) && !seen.is_free(c))
}

/// SplitMix64 step used to derive independent seeds.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mutable state of one exploration run.
#[derive(Clone, Debug)]
pub struct Episode<'a> {
    env: &'a Environment,
    cfg: &'a SimConfig,
    belief: BeliefMap,
    robot: Cell,
    distance: f64,
    steps: usize,
    explored: Vec<f64>,
    path: Vec<Cell>,
    violations: usize,
}

impl<'a> Episode<'a> {
    /// Places the robot at the start cell and takes the first measurement.
    pub fn new(env: &'a Environment, cfg: &'a SimConfig) -> Result<Self> {
        let mut belief = BeliefMap::unknown_like(&env.truth);
        sense(&env.truth, &mut belief, env.truth.cell_center(env.start), &cfg.sensor)?;
        let mut ep = Self {
            env,
            cfg,
            belief,
            robot: env.start,
            distance: 0.0,
            steps: 0,
            explored: Vec::new(),
            path: vec![env.start],
            violations: 0,
        };
        ep.explored.push(ep.explored_fraction());
        Ok(ep)
    }

    pub fn env(&self) -> &Environment {
        self.env
    }

    pub fn config(&self) -> &SimConfig {
        self.cfg
    }

    pub fn belief(&self) -> &BeliefMap {
        &self.belief
    }

    pub fn robot(&self) -> Cell {
        self.robot
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Explored fraction after each step, starting with the initial scan.
    pub fn explored_curve(&self) -> &[f64] {
        &self.explored
    }

    /// Robot cells visited, one per executed step plus the start.
    pub fn path(&self) -> &[Cell] {
        &self.path
    }

    /// Moves rejected because they did not follow a graph edge.
    pub fn violations(&self) -> usize {
        self.violations
    }

    pub fn explored_fraction(&self) -> f64 {
        self.belief.free_count() as f64 / self.env.truth.free_count() as f64
    }

    pub fn is_complete(&self) -> bool {
        is_complete(&self.belief, &self.env.truth)
    }

    /// Builds and annotates `G'_t` for the current belief and pose.
    pub fn observe(&self) -> Result<InformativeGraph> {
        let graph = CollisionFreeGraph::build(&self.belief, self.belief.cell_center(self.robot), self.cfg.lattice())?;
        let frontiers = detect_frontiers(&self.belief);
        Ok(annotate(graph, &self.belief, &frontiers, &self.cfg.sensor))
    }

    /// Oracle query for the current belief.
    pub fn oracle_problem(&self, restarts: usize, seed: u64) -> Result<OracleProblem> {
        Ok(OracleProblem {
            robot: self.env.oracle.node_at(self.robot)?,
            frontiers: ground_truth_frontiers(&self.env.truth, &self.belief),
            restarts,
            seed,
        })
    }

    /// Executes one step to node `to` of `graph` (which must describe the
    /// current pose) and senses. Staying put is a valid step. A move that is
    /// not an edge is refused, counted, and leaves the robot where it is.
    pub fn step(&mut self, graph: &CollisionFreeGraph, to: usize) -> Result<()> {
        let from = graph
            .node_at(self.robot)
            .ok_or(Error::InvalidPose(self.robot))?;
        self.steps += 1;
        if to != from {
            let Some(len) = graph.edge_length(from, to) else {
                self.violations += 1;
                self.explored.push(self.explored_fraction());
                self.path.push(self.robot);
                return Err(Error::IllegalMove { from, to });
            };
            self.distance += len;
            self.robot = graph.cell(to);
            let pose = self.belief.cell_center(self.robot);
            sense(&self.env.truth, &mut self.belief, pose, &self.cfg.sensor)?;
        }
        self.explored.push(self.explored_fraction());
        self.path.push(self.robot);
        Ok(())
    }
}
