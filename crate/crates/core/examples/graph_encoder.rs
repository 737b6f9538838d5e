//! Encodes an informative graph and reports the masked attention pattern.

use explore_core::encoder::{AttentionEncoder, EncoderConfig, GraphInput};
use explore_core::nn::ParamStore;
use explore_core::sim::{Environment, Episode, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> explore_core::Result<()> {
    let cfg = SimConfig::default();
    let env = Environment::generate(4, &cfg)?;
    let graph = Episode::new(&env, &cfg)?.observe()?;
    let enc_cfg = EncoderConfig { dim: 32, layers: 3, ffn_mult: 4, utility_cap: 50.0 };
    let input = GraphInput::new(&graph, cfg.sensor.range, enc_cfg.utility_cap);
    let mut store = ParamStore::new();
    let encoder = AttentionEncoder::new(enc_cfg, &mut store, &mut ChaCha8Rng::seed_from_u64(0))?;
    let (nodes, belief, weights) = encoder.encode(&store, &input);
    println!("{} nodes -> node features {:?}, belief feature of length {}", graph.len(), nodes.dim(), belief.len());
    for (l, w) in weights.iter().enumerate() {
        let nonzero = w.iter().filter(|&&v| v != 0.0).count();
        println!("layer {l}: {nonzero} of {} attention weights non-zero", w.len());
    }
    Ok(())
}
