//! Minimal neural-network toolkit: a reverse-mode autodiff tape over dense
//! matrices, named parameters with a binary checkpoint format, AdamW, and
//! the attention and feed-forward blocks shared by the encoder and predictor.

mod params;
mod tape;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use params::{AdamW, Gradients, ParamStore};
pub use tape::{Tape, Var};

/// `x · W + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Linear {
    pub w: usize,
    pub b: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, rng: &mut impl Rng) -> Self {
        Self {
            w: store.add_glorot(format!("{name}.w"), input, output, rng),
            b: store.add_const(format!("{name}.b"), 1, output, 0.0),
        }
    }

    pub fn forward(&self, t: &mut Tape, store: &ParamStore, x: Var) -> Var {
        let w = t.param(store, self.w);
        let b = t.param(store, self.b);
        let y = t.matmul(x, w);
        t.add_row(y, b)
    }
}

/// Row-wise layer normalization with learned gain and bias.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gain: usize,
    pub bias: usize,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        Self {
            gain: store.add_const(format!("{name}.gain"), 1, dim, 1.0),
            bias: store.add_const(format!("{name}.bias"), 1, dim, 0.0),
        }
    }

    pub fn forward(&self, t: &mut Tape, store: &ParamStore, x: Var) -> Var {
        let n = t.normalize(x);
        let g = t.param(store, self.gain);
        let b = t.param(store, self.bias);
        let y = t.mul_row(n, g);
        t.add_row(y, b)
    }
}

/// Single-head scaled dot-product attention with `d × d` projections and no
/// output projection: `h'_i = Σ_j w_ij v_j`, `w = softmax(q kᵀ / √d)` over
/// allowed pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attention {
    pub wq: usize,
    pub wk: usize,
    pub wv: usize,
    pub dim: usize,
}

impl Attention {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, rng: &mut impl Rng) -> Self {
        Self {
            wq: store.add_glorot(format!("{name}.wq"), dim, dim, rng),
            wk: store.add_glorot(format!("{name}.wk"), dim, dim, rng),
            wv: store.add_glorot(format!("{name}.wv"), dim, dim, rng),
            dim,
        }
    }

    /// Returns the attended features and the weight matrix variable.
    pub fn forward(
        &self,
        t: &mut Tape,
        store: &ParamStore,
        query: Var,
        source: Var,
        allowed: Option<&Array2<bool>>,
    ) -> (Var, Var) {
        let wq = t.param(store, self.wq);
        let wk = t.param(store, self.wk);
        let wv = t.param(store, self.wv);
        let q = t.matmul(query, wq);
        let k = t.matmul(source, wk);
        let v = t.matmul(source, wv);
        let u = t.matmul_nt(q, k);
        let u = t.scale(u, 1.0 / (self.dim as f64).sqrt());
        let w = t.masked_softmax(u, allowed);
        (t.matmul(w, v), w)
    }
}

/// Two-layer ReLU feed-forward sublayer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedForward {
    pub up: Linear,
    pub down: Linear,
}

impl FeedForward {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        Self {
            up: Linear::new(store, &format!("{name}.up"), dim, hidden, rng),
            down: Linear::new(store, &format!("{name}.down"), hidden, dim, rng),
        }
    }

    pub fn forward(&self, t: &mut Tape, store: &ParamStore, x: Var) -> Var {
        let h = self.up.forward(t, store, x);
        let h = t.relu(h);
        self.down.forward(t, store, h)
    }
}

/// Sinusoidal embedding of an integer step into `dim` values.
pub fn sinusoidal_embedding(k: usize, dim: usize) -> Array2<f64> {
    let half = dim / 2;
    let mut out = Array2::zeros((1, dim));
    for i in 0..half {
        let freq = (-(10_000f64.ln()) * i as f64 / half.max(1) as f64).exp();
        let a = k as f64 * freq;
        out[[0, i]] = a.sin();
        out[[0, half + i]] = a.cos();
    }
    out
}
