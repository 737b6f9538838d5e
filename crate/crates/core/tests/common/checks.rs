//! Encoder and noise-process checks shared by the unit suites and acceptance.

use explore_core::diffusion::{build_schedule, encode_actions, gaussian, ActionIndex, ACTION_DIM};
use explore_core::encoder::{AttentionEncoder, EdgeMask, EncoderConfig, GraphInput};
use explore_core::nn::ParamStore;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_input(rng: &mut ChaCha8Rng) -> GraphInput {
    let m = rng.random_range(2..30);
    let features = Array2::from_shape_simple_fn((m, 5), || rng.random_range(-1.0..1.0));
    let edges: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .filter(|_| rng.random_bool(0.3))
        .collect();
    GraphInput { features, mask: EdgeMask::from_edges(m, edges), current: rng.random_range(0..m) }
}

pub fn encoder(seed: u64) -> (AttentionEncoder, ParamStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let cfg = EncoderConfig { dim: 16, layers: 3, ffn_mult: 2, utility_cap: 50.0 };
    (AttentionEncoder::new(cfg, &mut store, &mut rng).unwrap(), store)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MaskReport {
    pub layers_checked: usize,
    /// Masked pairs with a non-zero weight.
    pub leaks: usize,
    /// Unmasked pairs with a zero weight.
    pub dead: usize,
    pub worst_row_sum_error: f64,
}

/// Self-attention weights of every layer over `graphs` random graphs.
pub fn mask_report(graphs: usize, seed: u64) -> MaskReport {
    let (enc, store) = encoder(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let mut out = MaskReport::default();
    for _ in 0..graphs {
        let input = random_input(&mut rng);
        let (_, _, weights) = enc.encode(&store, &input);
        for w in &weights {
            out.layers_checked += 1;
            for ((i, j), &v) in w.indexed_iter() {
                if input.mask.is_masked(i, j) {
                    out.leaks += usize::from(v != 0.0);
                } else {
                    out.dead += usize::from(v <= 0.0);
                }
            }
            for row in w.rows() {
                out.worst_row_sum_error = out.worst_row_sum_error.max((row.sum() - 1.0).abs());
            }
        }
    }
    out
}

/// Largest change of the belief feature and of the relabeled node features
/// under random node permutations.
pub fn permutation_drift(graphs: usize, seed: u64) -> (f64, f64) {
    let (enc, store) = encoder(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let (mut belief_drift, mut node_drift) = (0.0f64, 0.0f64);
    for _ in 0..graphs {
        let input = random_input(&mut rng);
        let mut perm: Vec<usize> = (0..input.features.nrows()).collect();
        perm.shuffle(&mut rng);
        let (nodes, belief, _) = enc.encode(&store, &input);
        let (nodes_p, belief_p, _) = enc.encode(&store, &input.permuted(&perm));
        for (a, b) in belief.iter().zip(belief_p.iter()) {
            belief_drift = belief_drift.max((a - b).abs());
        }
        for (k, &old) in perm.iter().enumerate() {
            for (a, b) in nodes_p.row(k).iter().zip(nodes.row(old).iter()) {
                node_drift = node_drift.max((a - b).abs());
            }
        }
    }
    (belief_drift, node_drift)
}

/// Squared-cosine `ᾱ_k = f(k) / f(0)` written out directly.
pub fn cosine_alpha_bar(k: usize, steps: usize) -> f64 {
    let s = 0.008;
    let f = |t: f64| ((t / steps as f64 + s) / (1.0 + s) * std::f64::consts::PI / 2.0).cos().powi(2);
    f(k as f64) / f(0.0)
}

#[derive(Clone, Copy, Debug)]
pub struct NoiseReport {
    /// Worst relative error of the sample variance against `1 − ᾱ_k`.
    pub variance_error: f64,
    /// Worst sample-mean error in units of its standard error.
    pub mean_z: f64,
}

/// Monte Carlo moments of `add_noise` on a one-hot row, at several `k`.
pub fn noise_report(draws: usize, seed: u64) -> NoiseReport {
    let s = build_schedule(100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a0 = encode_actions(&[ActionIndex::new(1, 3)]);
    let mut out = NoiseReport { variance_error: 0.0, mean_z: 0.0 };
    for k in [1, 10, 50, 90, 100] {
        let mut sum = Array2::<f64>::zeros(a0.dim());
        let mut sq = Array2::<f64>::zeros(a0.dim());
        for _ in 0..draws {
            let x = s.add_noise(&a0, k, &gaussian(1, ACTION_DIM, &mut rng));
            sum += &x;
            sq += &x.mapv(|v| v * v);
        }
        let mean = &sum / draws as f64;
        let var = &sq / draws as f64 - &mean.mapv(|v| v * v);
        let target = 1.0 - s.alpha_bar(k);
        for v in &var {
            out.variance_error = out.variance_error.max((v / target - 1.0).abs());
        }
        let se = (target / draws as f64).sqrt();
        for (m, a) in mean.iter().zip(a0.iter()) {
            out.mean_z = out.mean_z.max((m - s.alpha_bar(k).sqrt() * a).abs() / se);
        }
    }
    out
}
