//! Attention encoder over the informative graph.
//!
//! Node features `(x, y, u, b, occupancy)` are projected to `d` dimensions
//! and passed through stacked single-head self-attention blocks whose
//! attention is restricted to graph edges (plus self-loops). A final
//! cross-attention block with the current node as query summarizes the graph
//! into the robot belief feature.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CollisionFreeGraph, InformativeGraph};
use crate::world::Point;
use crate::nn::{Attention, FeedForward, LayerNorm, Linear, ParamStore, Tape, Var};

/// Width of the raw node feature vector.
pub const INPUT_DIM: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Feature width `d`.
    pub dim: usize,
    pub layers: usize,
    /// Feed-forward hidden width as a multiple of `d`.
    pub ffn_mult: usize,
    /// Utilities are divided by this and clipped to 1.
    pub utility_cap: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            layers: 6,
            ffn_mult: 4,
            utility_cap: 50.0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.layers == 0 || self.ffn_mult == 0 || !(self.utility_cap > 0.0) {
            return Err(Error::InvalidConfig("encoder sizes and utility cap must be positive".into()));
        }
        Ok(())
    }
}

/// Allowed attention pairs: graph edges and the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMask {
    pub allowed: Array2<bool>,
}

impl EdgeMask {
    pub fn from_graph(graph: &CollisionFreeGraph) -> Self {
        Self::from_edges(graph.len(), graph.edges())
    }

    /// Mask for `m` nodes and undirected `edges`.
    pub fn from_edges(m: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut allowed = Array2::from_elem((m, m), false);
        for i in 0..m {
            allowed[[i, i]] = true;
        }
        for (i, j) in edges {
            allowed[[i, j]] = true;
            allowed[[j, i]] = true;
        }
        Self { allowed }
    }

    /// `M_ij = 1`: attention from `i` to `j` is blocked.
    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        !self.allowed[[i, j]]
    }

    pub fn len(&self) -> usize {
        self.allowed.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }
}

/// Node features: robot-centric coordinates over `sensor_range`, utility
/// over `utility_cap` clipped to 1, guidepost and occupancy flags.
pub fn normalize_inputs(graph: &InformativeGraph, sensor_range: f64, utility_cap: f64) -> Array2<f64> {
    let positions: Vec<Point> = (0..graph.len()).map(|i| graph.base.position(i)).collect();
    node_features(&positions, &graph.utility, &graph.guidepost, graph.current(), sensor_range, utility_cap)
}

/// [`normalize_inputs`] from raw per-node annotations.
pub fn node_features(
    positions: &[Point],
    utility: &[u32],
    guidepost: &[bool],
    current: usize,
    sensor_range: f64,
    utility_cap: f64,
) -> Array2<f64> {
    let m = positions.len();
    let robot = positions[current];
    let mut x = Array2::zeros((m, INPUT_DIM));
    for i in 0..m {
        let p = positions[i];
        x[[i, 0]] = (p.x - robot.x) / sensor_range;
        x[[i, 1]] = (p.y - robot.y) / sensor_range;
        x[[i, 2]] = (utility[i] as f64 / utility_cap).min(1.0);
        x[[i, 3]] = f64::from(u8::from(guidepost[i]));
        x[[i, 4]] = f64::from(u8::from(i == current));
    }
    x
}

/// Encoder input for one graph snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphInput {
    pub features: Array2<f64>,
    pub mask: EdgeMask,
    pub current: usize,
}

impl GraphInput {
    pub fn new(graph: &InformativeGraph, sensor_range: f64, utility_cap: f64) -> Self {
        Self {
            features: normalize_inputs(graph, sensor_range, utility_cap),
            mask: EdgeMask::from_graph(&graph.base),
            current: graph.current(),
        }
    }

    /// The same graph with nodes relabeled: new node `k` is old node `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = perm.len();
        let features = self.features.select(ndarray::Axis(0), perm);
        let allowed = Array2::from_shape_fn((m, m), |(i, j)| self.mask.allowed[[perm[i], perm[j]]]);
        let current = perm.iter().position(|&p| p == self.current).expect("perm covers all nodes");
        Self {
            features,
            mask: EdgeMask { allowed },
            current,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Block {
    attn: Attention,
    norm1: LayerNorm,
    ffn: FeedForward,
    norm2: LayerNorm,
}

impl Block {
    fn new(store: &mut ParamStore, name: &str, cfg: &EncoderConfig, rng: &mut impl Rng) -> Self {
        Self {
            attn: Attention::new(store, &format!("{name}.attn"), cfg.dim, rng),
            norm1: LayerNorm::new(store, &format!("{name}.norm1"), cfg.dim),
            ffn: FeedForward::new(store, &format!("{name}.ffn"), cfg.dim, cfg.ffn_mult * cfg.dim, rng),
            norm2: LayerNorm::new(store, &format!("{name}.norm2"), cfg.dim),
        }
    }

    /// Post-norm residual block; returns output and attention weights.
    fn forward(
        &self,
        t: &mut Tape,
        store: &ParamStore,
        query: Var,
        source: Var,
        allowed: Option<&Array2<bool>>,
    ) -> (Var, Var) {
        let (a, w) = self.attn.forward(t, store, query, source, allowed);
        let x = t.add(query, a);
        let x = self.norm1.forward(t, store, x);
        let f = self.ffn.forward(t, store, x);
        let x = t.add(x, f);
        (self.norm2.forward(t, store, x), w)
    }
}

/// Recorded encoder pass.
#[derive(Clone, Debug)]
pub struct EncoderOutput {
    /// `m × d` node features.
    pub nodes: Var,
    /// `1 × d` robot belief feature.
    pub belief: Var,
    /// Self-attention weights per layer (`m × m`).
    pub weights: Vec<Var>,
    /// Cross-attention weights (`1 × m`).
    pub cross_weights: Var,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionEncoder {
    pub cfg: EncoderConfig,
    input: Linear,
    blocks: Vec<Block>,
    cross: Block,
}

impl AttentionEncoder {
    /// Registers parameters under the `enc.` prefix.
    pub fn new(cfg: EncoderConfig, store: &mut ParamStore, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        let input = Linear::new(store, "enc.input", INPUT_DIM, cfg.dim, rng);
        let blocks = (0..cfg.layers)
            .map(|l| Block::new(store, &format!("enc.layer{l}"), &cfg, rng))
            .collect();
        let cross = Block::new(store, "enc.cross", &cfg, rng);
        Ok(Self {
            cfg,
            input,
            blocks,
            cross,
        })
    }

    pub fn forward(&self, t: &mut Tape, store: &ParamStore, input: &GraphInput) -> EncoderOutput {
        let x = t.constant(input.features.clone());
        let mut h = self.input.forward(t, store, x);
        let mut weights = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (next, w) = block.forward(t, store, h, h, Some(&input.mask.allowed));
            h = next;
            weights.push(w);
        }
        let current = t.rows(h, &[input.current]);
        let (belief, cross_weights) = self.cross.forward(t, store, current, h, None);
        EncoderOutput {
            nodes: h,
            belief,
            weights,
            cross_weights,
        }
    }

    /// Forward pass returning plain values: node features, belief feature and
    /// the per-layer self-attention weights.
    pub fn encode(&self, store: &ParamStore, input: &GraphInput) -> (Array2<f64>, Array1<f64>, Vec<Array2<f64>>) {
        let mut t = Tape::new();
        let out = self.forward(&mut t, store, input);
        let belief = t.value(out.belief).row(0).to_owned();
        let weights = out.weights.iter().map(|&w| t.value(w).clone()).collect();
        (t.value(out.nodes).clone(), belief, weights)
    }
}
