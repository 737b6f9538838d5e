//! Diffusion path policy: a noise schedule, a transformer noise predictor
//! conditioned on encoder belief features, iterative denoising of action
//! sequences, and decoding of the result into executable graph moves.

mod decode;
mod predictor;
mod schedule;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use decode::{decode_actions, encode_actions, repair_collisions, ActionIndex, HorizonConfig};
pub use predictor::{NoisePredictor, PredictorConfig};
pub use schedule::{build_schedule, NoiseSchedule, COSINE_OFFSET, MAX_BETA};

use crate::encoder::{AttentionEncoder, EncoderConfig, GraphInput};
use crate::error::{Error, Result};
use crate::nn::{ParamStore, Tape, Var};

/// Values per action step: two one-hot blocks of five.
pub const ACTION_DIM: usize = 10;

/// Anything that predicts the noise in `A^k` at step `k`.
pub trait EpsilonModel {
    fn predict(&self, actions: &Array2<f64>, k: usize) -> Array2<f64>;
}

impl<F: Fn(&Array2<f64>, usize) -> Array2<f64>> EpsilonModel for F {
    fn predict(&self, actions: &Array2<f64>, k: usize) -> Array2<f64> {
        self(actions, k)
    }
}

/// Standard-normal matrix.
pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}

/// Reverse process from `a_k` (usually unit Gaussian): for `k = K … 1`,
/// `A^{k−1} = α(k) · (A^k − γ(k) · ε̂ + σ(k) · z)`. With `stochastic` off
/// the `σ` term is dropped.
///
/// With `clip = Some(c)`, `ε̂` is first replaced by the noise implied by the
/// clean estimate `Â_0 = (A^k − √(1 − ᾱ_k) · ε̂) / √ᾱ_k` clamped to `[−c, c]`.
/// When no entry is clamped this is the plain update.
pub fn denoise_from(
    a_k: Array2<f64>,
    model: &impl EpsilonModel,
    schedule: &NoiseSchedule,
    rng: &mut impl Rng,
    stochastic: bool,
    clip: Option<f64>,
) -> Result<Array2<f64>> {
    let mut a = a_k;
    for k in (1..=schedule.steps()).rev() {
        let mut eps = model.predict(&a, k);
        if let Some(c) = clip {
            let ab = schedule.alpha_bar(k);
            let (sa, sn) = (ab.sqrt(), (1.0 - ab).sqrt());
            let x0 = ((&a - &(&eps * sn)) / sa).mapv(|v| v.clamp(-c, c));
            eps = (&a - &(x0 * sa)) / sn;
        }
        let mut next = &a - &(eps * schedule.gamma(k));
        let sigma = schedule.sigma(k);
        if stochastic && sigma > 0.0 {
            next = next + gaussian(a.nrows(), a.ncols(), rng) * sigma;
        }
        a = next * schedule.alpha(k);
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure(k));
        }
    }
    Ok(a)
}

/// Samples `A_0` starting from fresh unit noise of shape `rows × ACTION_DIM`.
pub fn denoise(
    rows: usize,
    model: &impl EpsilonModel,
    schedule: &NoiseSchedule,
    rng: &mut impl Rng,
    clip: Option<f64>,
) -> Result<Array2<f64>> {
    let start = gaussian(rows, ACTION_DIM, rng);
    denoise_from(start, model, schedule, rng, true, clip)
}

/// Encoder, predictor and schedule sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub encoder: EncoderConfig,
    pub predictor: PredictorConfig,
    pub horizon: HorizonConfig,
    /// Denoising steps `K`.
    pub diffusion_steps: usize,
    /// Sensor range used to scale node coordinates (meters).
    pub sensor_range: f64,
    /// Clamp on the clean-sample estimate while sampling; `None` runs the
    /// unclamped update.
    #[serde(default = "default_clip")]
    pub clip_sample: Option<f64>,
}

fn default_clip() -> Option<f64> {
    Some(1.0)
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            predictor: PredictorConfig::default(),
            horizon: HorizonConfig::default(),
            diffusion_steps: 100,
            sensor_range: 6.0,
            clip_sample: default_clip(),
        }
    }
}

impl PolicyConfig {
    /// Small network that trains on one CPU core in minutes.
    pub fn desk() -> Self {
        Self {
            encoder: EncoderConfig {
                dim: 32,
                layers: 3,
                ffn_mult: 4,
                utility_cap: 50.0,
            },
            predictor: PredictorConfig {
                dim: 128,
                blocks: 2,
                ffn_mult: 4,
            },
            ..Self::default()
        }
    }
}

/// One training draw: denoising step and the noise added at that step.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseDraw {
    pub k: usize,
    pub eps: Array2<f64>,
}

/// Encoder + noise predictor with their parameters.
#[derive(Clone, Debug)]
pub struct DiffusionPolicy {
    pub cfg: PolicyConfig,
    pub params: ParamStore,
    pub encoder: AttentionEncoder,
    pub predictor: NoisePredictor,
    pub schedule: NoiseSchedule,
}

impl DiffusionPolicy {
    /// Fresh parameters drawn from `seed`.
    pub fn new(cfg: PolicyConfig, seed: u64) -> Result<Self> {
        cfg.horizon.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let encoder = AttentionEncoder::new(cfg.encoder, &mut params, &mut rng)?;
        let predictor = NoisePredictor::new(
            cfg.predictor,
            cfg.encoder.dim,
            cfg.horizon.pred,
            cfg.horizon.obs,
            &mut params,
            &mut rng,
        )?;
        let schedule = build_schedule(cfg.diffusion_steps)?;
        Ok(Self {
            cfg,
            params,
            encoder,
            predictor,
            schedule,
        })
    }

    /// `T_o × d` conditioning: belief features of the observation window, oldest first.
    pub fn condition(&self, t: &mut Tape, window: &[&GraphInput], freeze_encoder: bool) -> Var {
        assert_eq!(window.len(), self.cfg.horizon.obs, "observation window length");
        let beliefs: Vec<Var> = window
            .iter()
            .map(|g| self.encoder.forward(t, &self.params, g).belief)
            .collect();
        let cond = t.concat_rows(&beliefs);
        if freeze_encoder {
            t.detach(cond)
        } else {
            cond
        }
    }

    /// Predicted noise for a noisy sequence, recorded on `t`.
    pub fn predict_noise(&self, t: &mut Tape, cond: Var, noisy: &Array2<f64>, k: usize) -> Var {
        let a = t.constant(noisy.clone());
        self.predictor.forward(t, &self.params, a, k, cond)
    }

    /// Mean squared error between the drawn noise and its prediction,
    /// averaged over `draws` that share one encoder pass.
    pub fn training_loss(&self, t: &mut Tape, cond: Var, a0: &Array2<f64>, draws: &[NoiseDraw]) -> Var {
        assert!(!draws.is_empty(), "need at least one noise draw");
        let losses: Vec<Var> = draws
            .iter()
            .map(|d| {
                let noisy = self.schedule.add_noise(a0, d.k, &d.eps);
                let pred = self.predict_noise(t, cond, &noisy, d.k);
                let target = t.constant(d.eps.clone());
                let diff = t.sub(target, pred);
                t.mean_square(diff)
            })
            .collect();
        let all = t.concat_rows(&losses);
        // mean of per-draw means: sum via a ones row, then scale
        let ones = t.constant(Array2::ones((1, losses.len())));
        let sum = t.matmul(ones, all);
        t.scale(sum, 1.0 / losses.len() as f64)
    }

    /// Draws `count` uniform steps in `1..=K` with unit noise.
    pub fn sample_draws(&self, count: usize, rng: &mut impl Rng) -> Vec<NoiseDraw> {
        (0..count)
            .map(|_| NoiseDraw {
                k: rng.random_range(1..=self.schedule.steps()),
                eps: gaussian(self.cfg.horizon.pred, ACTION_DIM, rng),
            })
            .collect()
    }

    /// Belief-conditioned sample of `A_0` (`T_p × 10`).
    pub fn sample(&self, window: &[&GraphInput], rng: &mut impl Rng) -> Result<Array2<f64>> {
        let mut t = Tape::new();
        let cond = self.condition(&mut t, window, true);
        let cond_value = t.value(cond).clone();
        let model = |a: &Array2<f64>, k: usize| {
            let mut tape = Tape::new();
            let c = tape.constant(cond_value.clone());
            let p = self.predict_noise(&mut tape, c, a, k);
            tape.value(p).clone()
        };
        denoise(self.cfg.horizon.pred, &model, &self.schedule, rng, self.cfg.clip_sample)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = serde_json::to_string(&self.cfg)?;
        let mut w = BufWriter::new(File::create(path)?);
        self.params.write_checkpoint(&mut w, &header)?;
        Ok(())
    }

    /// Loads a checkpoint written by [`DiffusionPolicy::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let (header, stored) = ParamStore::read_checkpoint(&mut r, path)?;
        let cfg: PolicyConfig = serde_json::from_str(&header).map_err(|e| Error::Format {
            what: "checkpoint",
            path: path.to_path_buf(),
            reason: format!("bad header: {e}"),
        })?;
        let mut policy = Self::new(cfg, 0)?;
        policy.params.load_from(&stored).map_err(|reason| Error::Format {
            what: "checkpoint",
            path: path.to_path_buf(),
            reason,
        })?;
        Ok(policy)
    }
}
