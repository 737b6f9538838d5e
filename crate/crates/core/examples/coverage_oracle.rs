//! Plans a ground-truth coverage tour over the frontiers seen at the start.

use explore_core::sim::{Environment, Episode, SimConfig};

fn main() -> explore_core::Result<()> {
    let cfg = SimConfig::default();
    let env = Environment::generate(11, &cfg)?;
    let problem = Episode::new(&env, &cfg)?.oracle_problem(64, 0)?;
    let plan = env.oracle.plan_coverage(&problem)?;
    let graph = env.oracle.graph();
    println!("{} frontier cells, tour cost {:.1} m", problem.frontiers.len(), plan.cost);
    for w in &plan.waypoints {
        println!("waypoint {:?}", graph.cell(*w));
    }
    let first = plan.best_history.first().copied().unwrap_or(f64::NAN);
    println!("best cost after 1 restart {first:.1} m, after {} restarts {:.1} m", plan.best_history.len(), plan.cost);
    Ok(())
}
