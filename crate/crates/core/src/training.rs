//! Behavior cloning of the diffusion policy on oracle demonstrations.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{make_windows, DemonstrationSet, Window};
use crate::diffusion::DiffusionPolicy;
use crate::encoder::GraphInput;
use crate::error::{Error, Result};
use crate::nn::{AdamW, Gradients, Tape};

pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const LAST_CHECKPOINT: &str = "last.ckpt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Noise draws `(k, ε)` per window, sharing one encoder pass.
    pub draws_per_sample: usize,
    /// Global gradient-norm clip; `0` disables clipping.
    pub grad_clip: f64,
    /// Iterations of linear learning-rate warmup.
    pub warmup_iters: usize,
    /// Cosine decay of the learning rate to zero over the run.
    pub cosine_decay: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    /// Full-scale protocol: 130 epochs, batches of 256, learning rate `1e-4`.
    pub fn full() -> Self {
        Self {
            epochs: 130,
            batch_size: 256,
            learning_rate: 1e-4,
            weight_decay: 1e-3,
            draws_per_sample: 1,
            grad_clip: 1.0,
            warmup_iters: 500,
            cosine_decay: true,
            seed: 0,
        }
    }

    /// Settings for a 200-demonstration dataset on one CPU core.
    pub fn desk() -> Self {
        Self {
            epochs: 40,
            batch_size: 4,
            learning_rate: 1e-3,
            weight_decay: 1e-3,
            draws_per_sample: 4,
            grad_clip: 1.0,
            warmup_iters: 100,
            cosine_decay: true,
            seed: 0,
        }
    }

    /// Memorizing a 20-demonstration subset: the desk settings run for
    /// more epochs over the smaller set.
    pub fn overfit() -> Self {
        Self { epochs: 300, ..Self::desk() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.draws_per_sample == 0 {
            return Err(Error::InvalidConfig("epochs, batch size and draws must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) || !(self.grad_clip >= 0.0) {
            return Err(Error::InvalidConfig("rates and clip must be non-negative".into()));
        }
        Ok(())
    }

    /// Learning rate at iteration `it` of `total`.
    pub fn learning_rate_at(&self, it: usize, total: usize) -> f64 {
        let warm = if it < self.warmup_iters {
            (it + 1) as f64 / self.warmup_iters as f64
        } else {
            1.0
        };
        let decay = if self.cosine_decay && total > 0 {
            0.5 * (1.0 + (std::f64::consts::PI * it as f64 / total as f64).cos())
        } else {
            1.0
        };
        self.learning_rate * warm * decay
    }
}

/// Encoder inputs for every recorded step plus every training window.
#[derive(Clone, Debug)]
pub struct PreparedData {
    /// `inputs[r][t]`: snapshot `t` of record `r`.
    pub inputs: Vec<Vec<GraphInput>>,
    /// `(record, window)` pairs.
    pub windows: Vec<(usize, Window)>,
}

impl PreparedData {
    pub fn new(set: &DemonstrationSet, policy: &DiffusionPolicy) -> Self {
        let cfg = &policy.cfg;
        let inputs = set
            .records
            .iter()
            .map(|r| {
                r.steps
                    .iter()
                    .map(|s| s.graph.to_input(r.resolution, cfg.sensor_range, cfg.encoder.utility_cap))
                    .collect()
            })
            .collect();
        let windows = set
            .records
            .iter()
            .enumerate()
            .flat_map(|(i, r)| make_windows(r, &cfg.horizon).into_iter().map(move |w| (i, w)))
            .collect();
        Self { inputs, windows }
    }

    pub fn observation(&self, idx: usize) -> Vec<&GraphInput> {
        let (r, w) = &self.windows[idx];
        w.obs.iter().map(|&t| &self.inputs[*r][t]).collect()
    }
}

/// Per-epoch training summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub learning_rate: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    /// 1-based epoch with the lowest mean loss.
    pub best_epoch: usize,
    pub best_loss: f64,
    pub iterations: usize,
}

/// Minimizes the noise-prediction loss over `set`, updating `policy` in
/// place. On return `policy` holds the parameters of the best epoch. With
/// `out` set, `best.ckpt` and `last.ckpt` are written there after every epoch.
pub fn train(
    set: &DemonstrationSet,
    policy: &mut DiffusionPolicy,
    cfg: &TrainConfig,
    out: Option<&Path>,
    mut log: impl FnMut(&EpochLog),
) -> Result<TrainReport> {
    cfg.validate()?;
    if set.records.iter().all(|r| r.is_empty()) {
        return Err(Error::InvalidConfig("training needs at least one demonstration step".into()));
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let data = PreparedData::new(set, policy);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = AdamW::new(&policy.params, cfg.learning_rate, cfg.weight_decay);
    let per_epoch = data.windows.len().div_ceil(cfg.batch_size);
    let total = per_epoch * cfg.epochs;
    let mut order: Vec<usize> = (0..data.windows.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, crate::nn::ParamStore)> = None;
    let mut it = 0;
    for epoch in 1..=cfg.epochs {
        let started = std::time::Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros_like(&policy.params);
            let scale = 1.0 / batch.len() as f64;
            for &idx in batch {
                let mut t = Tape::new();
                let window = data.observation(idx);
                let cond = policy.condition(&mut t, &window, false);
                let draws = policy.sample_draws(cfg.draws_per_sample, &mut rng);
                let loss = policy.training_loss(&mut t, cond, &data.windows[idx].1.actions, &draws);
                let value = t.value(loss)[[0, 0]];
                if !value.is_finite() {
                    return Err(Error::Diverged { epoch, loss: value });
                }
                loss_sum += value;
                t.backward_into(loss, scale, &mut grads);
            }
            let norm = grads.global_norm();
            if !norm.is_finite() {
                return Err(Error::Diverged { epoch, loss: norm });
            }
            if cfg.grad_clip > 0.0 && norm > cfg.grad_clip {
                grads.scale(cfg.grad_clip / norm);
            }
            opt.lr = cfg.learning_rate_at(it, total);
            opt.step(&mut policy.params, &grads);
            it += 1;
        }
        let entry = EpochLog {
            epoch,
            mean_loss: loss_sum / data.windows.len() as f64,
            learning_rate: opt.lr,
            seconds: started.elapsed().as_secs_f64(),
        };
        log(&entry);
        if best.as_ref().is_none_or(|b| entry.mean_loss < b.1) {
            best = Some((epoch, entry.mean_loss, policy.params.clone()));
            if let Some(dir) = out {
                policy.save(&dir.join(BEST_CHECKPOINT))?;
            }
        }
        if let Some(dir) = out {
            policy.save(&dir.join(LAST_CHECKPOINT))?;
        }
        epochs.push(entry);
    }
    let (best_epoch, best_loss, params) = best.expect("at least one epoch ran");
    policy.params = params;
    Ok(TrainReport {
        epochs,
        best_epoch,
        best_loss,
        iterations: it,
    })
}
