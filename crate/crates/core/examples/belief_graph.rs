//! Senses from the start pose and prints the informative graph built on the belief.

use explore_core::sim::{Environment, Episode, SimConfig};

fn main() -> explore_core::Result<()> {
    let cfg = SimConfig::default();
    let env = Environment::generate(3, &cfg)?;
    let episode = Episode::new(&env, &cfg)?;
    let graph = episode.observe()?;
    let informative = (0..graph.len()).filter(|&i| graph.utility[i] > 0).count();
    println!(
        "explored {:.1}%: {} nodes, {} edges, {informative} informative, robot at {:?}",
        100.0 * episode.explored_fraction(),
        graph.len(),
        graph.base.edge_count(),
        graph.base.cell(graph.current())
    );
    for i in (0..graph.len()).filter(|&i| graph.guidepost[i]) {
        println!("guidepost {:?} utility {}", graph.base.cell(i), graph.utility[i]);
    }
    Ok(())
}
