//! Samples an action sequence for the current belief, decodes it into lattice
//! cells and repairs it against the collision-free graph.

use explore_core::diffusion::{decode_actions, repair_collisions, DiffusionPolicy, PolicyConfig};
use explore_core::encoder::GraphInput;
use explore_core::sim::{Environment, Episode, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> explore_core::Result<()> {
    let cfg = SimConfig::default();
    let env = Environment::generate(2, &cfg)?;
    let episode = Episode::new(&env, &cfg)?;
    let graph = episode.observe()?;
    let policy = DiffusionPolicy::new(PolicyConfig::desk(), 0)?;
    let input = GraphInput::new(&graph, policy.cfg.sensor_range, policy.cfg.encoder.utility_cap);
    let window = vec![&input; policy.cfg.horizon.obs];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a0 = policy.sample(&window, &mut rng)?;
    let robot = graph.base.cell(graph.current());
    let path = decode_actions(&a0, robot, cfg.lattice().spacing, &policy.cfg.horizon);
    let repaired = repair_collisions(&path, &graph, &policy.cfg.horizon)?;
    println!("robot {robot:?}");
    println!("sampled  {path:?}");
    println!("repaired {:?}", repaired.iter().map(|&i| graph.base.cell(i)).collect::<Vec<_>>());
    Ok(())
}
