//! Generates a dungeon environment and writes its ground truth as a PGM image.

use explore_core::sim::{Environment, SimConfig};
use explore_core::world::{write_pgm, PgmImage};

fn main() -> explore_core::Result<()> {
    let cfg = SimConfig::default();
    let env = Environment::generate(7, &cfg)?;
    let free = env.truth.coords().filter(|&c| env.truth.is_free(c)).count();
    println!(
        "seed {}: {}x{} cells, {free} free, start {:?}, oracle graph {} nodes",
        env.seed,
        env.truth.width(),
        env.truth.height(),
        env.start,
        env.oracle.graph().len()
    );
    let path = std::env::temp_dir().join("dungeon_7.pgm");
    write_pgm(&path, &PgmImage::from_truth(&env.truth))?;
    println!("wrote {}", path.display());
    Ok(())
}
