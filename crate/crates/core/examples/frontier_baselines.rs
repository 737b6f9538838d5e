//! Runs the nearest-frontier and utility planners on one environment.

use explore_core::baselines::UtilityConfig;
use explore_core::eval::{run_episode, NearestPlanner, Planner, UtilityPlanner};
use explore_core::sim::{Environment, SimConfig};

fn main() -> explore_core::Result<()> {
    let cfg = SimConfig::default();
    let env = Environment::generate(5, &cfg)?;
    let mut planners: [Box<dyn Planner>; 2] =
        [Box::new(NearestPlanner), Box::new(UtilityPlanner { cfg: UtilityConfig { lambda: 0.1 } })];
    for p in planners.iter_mut() {
        let r = run_episode(p.as_mut(), &env, &cfg)?;
        println!(
            "{}: {:.1} m in {} steps, completed {}, explored {:.1}%",
            r.planner,
            r.distance,
            r.steps,
            r.completed,
            100.0 * r.explored.last().copied().unwrap_or(0.0)
        );
    }
    Ok(())
}
