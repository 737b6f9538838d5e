//! Central finite-difference checks of the hand-written backward passes.

use explore_core::diffusion::{DiffusionPolicy, HorizonConfig, NoiseDraw, PolicyConfig, PredictorConfig};
use explore_core::encoder::{EdgeMask, EncoderConfig, GraphInput};
use explore_core::nn::{Gradients, Tape};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-3;
/// Entries whose gradient is this small are compared absolutely.
pub const ABS_FLOOR: f64 = 1e-7;

pub fn tiny_config() -> PolicyConfig {
    PolicyConfig {
        encoder: EncoderConfig { dim: 8, layers: 2, ffn_mult: 2, utility_cap: 50.0 },
        predictor: PredictorConfig { dim: 8, blocks: 1, ffn_mult: 2 },
        horizon: HorizonConfig { obs: 2, pred: 4, action: 1 },
        diffusion_steps: 10,
        sensor_range: 6.0,
        clip_sample: None,
    }
}

pub fn random_graph(m: usize, rng: &mut impl Rng) -> GraphInput {
    let features = Array2::from_shape_simple_fn((m, 5), || rng.random_range(-1.0..1.0));
    let mut allowed = Array2::from_elem((m, m), false);
    for i in 0..m {
        allowed[[i, i]] = true;
        for j in i + 1..m {
            if rng.random_bool(0.5) {
                allowed[[i, j]] = true;
                allowed[[j, i]] = true;
            }
        }
    }
    GraphInput { features, mask: EdgeMask { allowed }, current: rng.random_range(0..m) }
}

pub fn loss_value(policy: &DiffusionPolicy, window: &[&GraphInput], a0: &Array2<f64>, draws: &[NoiseDraw], freeze: bool) -> (f64, Gradients) {
    let mut t = Tape::new();
    let cond = policy.condition(&mut t, window, freeze);
    let loss = policy.training_loss(&mut t, cond, a0, draws);
    let value = t.value(loss)[[0, 0]];
    (value, t.backward(loss, &policy.params))
}

/// Finite-difference comparison over every parameter entry.
#[derive(Clone, Copy, Debug, Default)]
pub struct GradCheck {
    pub checked: usize,
    pub failures: usize,
    /// Encoder entries with a non-negligible gradient.
    pub encoder_active: usize,
    pub worst_excess: f64,
}

/// Checks all gradients of the loss on a 5-node and a 4-node graph.
pub fn check(seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = DiffusionPolicy::new(tiny_config(), seed).unwrap();
    let g1 = random_graph(5, &mut rng);
    let g2 = random_graph(4, &mut rng);
    let window = [&g1, &g2];
    let a0 = Array2::from_shape_simple_fn((4, 10), || if rng.random_bool(0.2) { 1.0 } else { 0.0 });
    let draws = policy.sample_draws(2, &mut rng);
    let (_, grads) = loss_value(&policy, &window, &a0, &draws, false);

    let mut out = GradCheck::default();
    for id in 0..policy.params.len() {
        let shape = policy.params.value(id).dim();
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                let orig = policy.params.value(id)[[r, c]];
                policy.params.value_mut(id)[[r, c]] = orig + STEP;
                let (plus, _) = loss_value(&policy, &window, &a0, &draws, false);
                policy.params.value_mut(id)[[r, c]] = orig - STEP;
                let (minus, _) = loss_value(&policy, &window, &a0, &draws, false);
                policy.params.value_mut(id)[[r, c]] = orig;
                let fd = (plus - minus) / (2.0 * STEP);
                let g = grads.get(id)[[r, c]];
                let excess = (g - fd).abs() - (REL_TOL * g.abs().max(fd.abs()) + ABS_FLOOR);
                out.worst_excess = out.worst_excess.max(excess);
                out.failures += usize::from(excess > 0.0);
                out.checked += 1;
                if policy.params.name(id).starts_with("enc.") && g.abs() > ABS_FLOOR {
                    out.encoder_active += 1;
                }
            }
        }
    }
    out
}
