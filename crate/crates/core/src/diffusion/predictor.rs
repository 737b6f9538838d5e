use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ACTION_DIM;
use crate::error::{Error, Result};
use crate::nn::{sinusoidal_embedding, Attention, FeedForward, LayerNorm, Linear, ParamStore, Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub dim: usize,
    pub blocks: usize,
    pub ffn_mult: usize,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            blocks: 4,
            ffn_mult: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Block {
    self_attn: Attention,
    norm1: LayerNorm,
    cross_attn: Attention,
    norm2: LayerNorm,
    ffn: FeedForward,
    norm3: LayerNorm,
}

/// Transformer noise predictor `ε_θ(O_t, A^k, k)`.
///
/// Action steps become tokens (linear embedding plus a learned position).
/// The step `k` (sinusoidal embedding, projected) and the `T_o` belief
/// features (projected, plus a learned position) form the conditioning
/// tokens that every block cross-attends to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePredictor {
    pub cfg: PredictorConfig,
    action_in: Linear,
    action_pos: usize,
    step_in: Linear,
    cond_in: Linear,
    cond_pos: usize,
    blocks: Vec<Block>,
    out: Linear,
}

impl NoisePredictor {
    /// Registers parameters under the `pred.` prefix.
    pub fn new(
        cfg: PredictorConfig,
        cond_dim: usize,
        horizon: usize,
        obs_horizon: usize,
        store: &mut ParamStore,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if cfg.dim == 0 || cfg.blocks == 0 || cfg.ffn_mult == 0 || cfg.dim % 2 != 0 {
            return Err(Error::InvalidConfig("predictor width must be even and sizes positive".into()));
        }
        let d = cfg.dim;
        let mut pos = |name: &str, rows: usize, store: &mut ParamStore| {
            let v = Array2::from_shape_simple_fn((rows, d), || rng.random_range(-0.02..0.02));
            store.add(name, v)
        };
        let action_pos = pos("pred.action_pos", horizon, store);
        let cond_pos = pos("pred.cond_pos", obs_horizon, store);
        let action_in = Linear::new(store, "pred.action_in", ACTION_DIM, d, rng);
        let step_in = Linear::new(store, "pred.step_in", d, d, rng);
        let cond_in = Linear::new(store, "pred.cond_in", cond_dim, d, rng);
        let blocks = (0..cfg.blocks)
            .map(|b| {
                let n = format!("pred.block{b}");
                Block {
                    self_attn: Attention::new(store, &format!("{n}.self"), d, rng),
                    norm1: LayerNorm::new(store, &format!("{n}.norm1"), d),
                    cross_attn: Attention::new(store, &format!("{n}.cross"), d, rng),
                    norm2: LayerNorm::new(store, &format!("{n}.norm2"), d),
                    ffn: FeedForward::new(store, &format!("{n}.ffn"), d, cfg.ffn_mult * d, rng),
                    norm3: LayerNorm::new(store, &format!("{n}.norm3"), d),
                }
            })
            .collect();
        let out = Linear::new(store, "pred.out", d, ACTION_DIM, rng);
        Ok(Self {
            cfg,
            action_in,
            action_pos,
            step_in,
            cond_in,
            cond_pos,
            blocks,
            out,
        })
    }

    /// `actions`: `T_p × 10` noisy sequence; `cond`: `T_o × d_enc` belief features.
    pub fn forward(&self, t: &mut Tape, store: &ParamStore, actions: Var, k: usize, cond: Var) -> Var {
        let a = self.action_in.forward(t, store, actions);
        let apos = t.param(store, self.action_pos);
        let mut x = t.add(a, apos);

        let emb = t.constant(sinusoidal_embedding(k, self.cfg.dim));
        let step = self.step_in.forward(t, store, emb);
        let c = self.cond_in.forward(t, store, cond);
        let cpos = t.param(store, self.cond_pos);
        let c = t.add(c, cpos);
        let memory = t.concat_rows(&[step, c]);

        for b in &self.blocks {
            let (s, _) = b.self_attn.forward(t, store, x, x, None);
            let y = t.add(x, s);
            x = b.norm1.forward(t, store, y);
            let (c, _) = b.cross_attn.forward(t, store, x, memory, None);
            let y = t.add(x, c);
            x = b.norm2.forward(t, store, y);
            let f = b.ffn.forward(t, store, x);
            let y = t.add(x, f);
            x = b.norm3.forward(t, store, y);
        }
        self.out.forward(t, store, x)
    }
}
