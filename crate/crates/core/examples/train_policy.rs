//! Trains a small diffusion policy on two demonstrations and saves a checkpoint.

use explore_core::dataset::collect_demonstrations;
use explore_core::diffusion::{DiffusionPolicy, PolicyConfig};
use explore_core::sim::SimConfig;
use explore_core::training::{train, TrainConfig};

fn main() -> explore_core::Result<()> {
    let (set, _) = collect_demonstrations(1.., 2, &SimConfig::default(), |_| {})?;
    let mut policy = DiffusionPolicy::new(PolicyConfig::desk(), 0)?;
    let cfg = TrainConfig { epochs: 10, batch_size: 8, warmup_iters: 10, ..TrainConfig::desk() };
    let dir = std::env::temp_dir().join("explore_train");
    let report = train(&set, &mut policy, &cfg, Some(&dir), |e| {
        println!("epoch {} loss {:.4} lr {:.1e}", e.epoch, e.mean_loss, e.learning_rate)
    })?;
    println!("best epoch {} loss {:.4}; checkpoints in {}", report.best_epoch, report.best_loss, dir.display());
    Ok(())
}
