//! Episode runner, planners behind a common interface, and comparison reports.

mod dare;
mod report;

use std::path::Path;
use std::time::Instant;

pub use dare::{first_action, DarePlanner};
pub use report::{
    compare, paired_t_test, parse_seed_list, read_results_csv, write_results_csv, ComparisonReport, PairedTest,
    run_on_seed, PlannerSummary, ReferenceRow, PUBLISHED_REFERENCE,
};

use crate::baselines::{nearest_frontier, step_toward, utility_planner, UtilityConfig};
use crate::diffusion::DiffusionPolicy;
use crate::error::{Error, Result};
use crate::graph::InformativeGraph;
use crate::oracle::CoveragePlan;
use crate::sim::{derive_seed, Environment, Episode, SimConfig};
use crate::world::{BeliefMap, Cell};

/// A receding-horizon planner: given the current informative graph, return
/// the next node indices (in that graph) to execute before replanning.
pub trait Planner {
    fn name(&self) -> &str;

    /// Called before every episode.
    fn reset(&mut self, _env: &Environment) -> Result<()> {
        Ok(())
    }

    fn plan(&mut self, episode: &Episode<'_>, graph: &InformativeGraph) -> Result<Vec<usize>>;
}

#[derive(Clone, Debug, Default)]
pub struct NearestPlanner;

impl Planner for NearestPlanner {
    fn name(&self) -> &str {
        "nearest"
    }

    fn plan(&mut self, _episode: &Episode<'_>, graph: &InformativeGraph) -> Result<Vec<usize>> {
        Ok(vec![nearest_frontier(graph)?])
    }
}

#[derive(Clone, Debug, Default)]
pub struct UtilityPlanner {
    pub cfg: UtilityConfig,
}

impl Planner for UtilityPlanner {
    fn name(&self) -> &str {
        "utility"
    }

    fn plan(&mut self, _episode: &Episode<'_>, graph: &InformativeGraph) -> Result<Vec<usize>> {
        Ok(vec![utility_planner(graph, &self.cfg)?])
    }
}

/// Replans the ground-truth coverage tour every step and follows its first
/// edge (mapped onto the belief graph when the edge is not yet known).
#[derive(Clone, Debug)]
pub struct OraclePlanner {
    pub restarts: usize,
}

impl OraclePlanner {
    pub fn new(restarts: usize) -> Self {
        Self { restarts }
    }

    /// Coverage tour for the current belief, or `None` when nothing is left to cover.
    pub fn coverage(&self, episode: &Episode<'_>) -> Result<Option<CoveragePlan>> {
        let env = episode.env();
        let seed = derive_seed(env.seed, episode.steps() as u64);
        let problem = episode.oracle_problem(self.restarts, seed)?;
        if problem.frontiers.is_empty() {
            return Ok(None);
        }
        env.oracle.plan_coverage(&problem).map(Some)
    }

    /// The next cell on the oracle's coverage route.
    pub fn next_cell(&self, episode: &Episode<'_>) -> Result<Option<Cell>> {
        let plan = self.coverage(episode)?;
        let env = episode.env();
        Ok(plan.and_then(|p| p.route.get(1).map(|&n| env.oracle.graph().cell(n))))
    }
}

impl Planner for OraclePlanner {
    fn name(&self) -> &str {
        "oracle"
    }

    fn plan(&mut self, episode: &Episode<'_>, graph: &InformativeGraph) -> Result<Vec<usize>> {
        let cell = self.next_cell(episode)?.ok_or(Error::Stuck)?;
        Ok(vec![step_toward(graph, cell)?])
    }
}

/// Outcome of one planner on one environment.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    pub planner: String,
    /// Sum of executed edge lengths in meters.
    pub distance: f64,
    pub steps: usize,
    pub completed: bool,
    /// Explored free fraction after the initial scan and after every step.
    pub explored: Vec<f64>,
    /// Mean wall-clock seconds per planning call.
    pub plan_time_s: f64,
    /// Planned moves that did not follow an edge of the current graph.
    pub violations: usize,
    /// Robot cells, start first.
    pub path: Vec<Cell>,
    /// Belief at the end of the episode.
    pub belief: BeliefMap,
}

/// Runs `planner` on `env` until the map is explored, the planner is stuck,
/// or the step budget runs out.
pub fn run_episode(planner: &mut dyn Planner, env: &Environment, cfg: &SimConfig) -> Result<EpisodeResult> {
    let budget = env.step_budget(cfg)?;
    run_episode_with_budget(planner, env, cfg, budget)
}

pub fn run_episode_with_budget(
    planner: &mut dyn Planner,
    env: &Environment,
    cfg: &SimConfig,
    budget: usize,
) -> Result<EpisodeResult> {
    planner.reset(env)?;
    let mut ep = Episode::new(env, cfg)?;
    let mut plan_time = 0.0;
    let mut plans = 0usize;
    'outer: while !ep.is_complete() && ep.steps() < budget {
        let graph = ep.observe()?;
        let t0 = Instant::now();
        let planned = match planner.plan(&ep, &graph) {
            Ok(p) => p,
            Err(Error::Stuck) => break,
            Err(e) => return Err(e),
        };
        plan_time += t0.elapsed().as_secs_f64();
        plans += 1;
        if planned.is_empty() {
            break;
        }
        for node in planned {
            if ep.steps() >= budget || ep.is_complete() {
                break 'outer;
            }
            match ep.step(&graph.base, node) {
                Ok(()) => {}
                Err(Error::IllegalMove { .. }) => break,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(EpisodeResult {
        seed: env.seed,
        planner: planner.name().to_string(),
        distance: ep.distance(),
        steps: ep.steps(),
        completed: ep.is_complete(),
        explored: ep.explored_curve().to_vec(),
        plan_time_s: if plans == 0 { 0.0 } else { plan_time / plans as f64 },
        violations: ep.violations(),
        path: ep.path().to_vec(),
        belief: ep.belief().clone(),
    })
}

/// Trajectory dump: one `step x y` line per visited cell center (meters).
pub fn trajectory_dump(result: &EpisodeResult, resolution: f64) -> String {
    let mut out = String::new();
    for (i, c) in result.path.iter().enumerate() {
        let x = (c.x as f64 + 0.5) * resolution;
        let y = (c.y as f64 + 0.5) * resolution;
        out.push_str(&format!("{i} {x:.3} {y:.3}\n"));
    }
    out
}

/// Names accepted by [`planner_by_name`].
pub const PLANNER_NAMES: [&str; 4] = ["nearest", "utility", "dare", "oracle"];

/// Builds a planner by name. `dare` loads its parameters from `checkpoint`
/// and mixes `seed` into its sampling seed.
pub fn planner_by_name(
    name: &str,
    checkpoint: Option<&Path>,
    seed: u64,
    sim: &SimConfig,
    utility: UtilityConfig,
) -> Result<Box<dyn Planner>> {
    Ok(match name {
        "nearest" => Box::new(NearestPlanner),
        "utility" => Box::new(UtilityPlanner { cfg: utility }),
        "oracle" => Box::new(OraclePlanner::new(sim.oracle.restarts)),
        "dare" => {
            let path = checkpoint.ok_or_else(|| Error::InvalidConfig("planner `dare` needs a checkpoint".into()))?;
            Box::new(DarePlanner::new(DiffusionPolicy::load(path)?, seed))
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown planner `{other}`; expected one of {}",
                PLANNER_NAMES.join(", ")
            )))
        }
    })
}
