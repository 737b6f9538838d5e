//! Records oracle demonstrations, saves them and reads them back as training windows.

use explore_core::dataset::{collect_demonstrations, DemonstrationSet};
use explore_core::sim::SimConfig;

fn main() -> explore_core::Result<()> {
    let cfg = SimConfig::default();
    let (set, rejected) = collect_demonstrations(1.., 3, &cfg, |m| println!("{m}"))?;
    let dir = std::env::temp_dir().join("explore_demos");
    set.save(&dir, &rejected)?;
    let loaded = DemonstrationSet::load(&dir)?;
    for r in &loaded.records {
        println!("seed {}: {} steps, {:.1} m", r.seed, r.len(), r.distance);
    }
    println!("{} windows in {}", loaded.window_count(), dir.display());
    Ok(())
}
