use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Planner;
use crate::diffusion::{decode_actions, repair_collisions, ActionIndex, DiffusionPolicy};
use crate::encoder::GraphInput;
use crate::error::Result;
use crate::graph::InformativeGraph;
use crate::sim::{derive_seed, Environment, Episode};

/// The diffusion policy as a receding-horizon planner: keeps the last `T_o`
/// encoder inputs, samples an action sequence, decodes it onto the lattice,
/// repairs it against `G_t` and executes the first `T_a` moves.
#[derive(Clone, Debug)]
pub struct DarePlanner {
    pub policy: DiffusionPolicy,
    /// Mixed with the environment seed to seed sampling.
    pub seed: u64,
    history: Vec<GraphInput>,
    rng: ChaCha8Rng,
}

impl DarePlanner {
    pub fn new(policy: DiffusionPolicy, seed: u64) -> Self {
        Self {
            policy,
            seed,
            history: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// Observation window ending at the newest input, padded at the start by repetition.
fn window(history: &[GraphInput], obs: usize) -> Vec<&GraphInput> {
    let n = history.len();
    (0..obs).map(|i| &history[(n + i).saturating_sub(obs)]).collect()
}

/// The first future action of a sampled sequence (slot `T_o − 1`).
pub fn first_action(policy: &DiffusionPolicy, window: &[&GraphInput], rng: &mut ChaCha8Rng) -> Result<ActionIndex> {
    let a0 = policy.sample(window, rng)?;
    Ok(ActionIndex::from_row(a0.row(policy.cfg.horizon.obs - 1)))
}

impl Planner for DarePlanner {
    fn name(&self) -> &str {
        "dare"
    }

    fn reset(&mut self, env: &Environment) -> Result<()> {
        self.history.clear();
        self.rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, env.seed));
        Ok(())
    }

    fn plan(&mut self, episode: &Episode<'_>, graph: &InformativeGraph) -> Result<Vec<usize>> {
        let cfg = self.policy.cfg;
        self.history
            .push(GraphInput::new(graph, cfg.sensor_range, cfg.encoder.utility_cap));
        if self.history.len() > cfg.horizon.obs {
            self.history.remove(0);
        }
        let a0 = self.policy.sample(&window(&self.history, cfg.horizon.obs), &mut self.rng)?;
        let spacing = episode.config().dungeon.lattice_spacing;
        let path = decode_actions(&a0, episode.robot(), spacing, &cfg.horizon);
        let mut nodes = repair_collisions(&path, graph, &cfg.horizon)?;
        nodes.truncate(cfg.horizon.action);
        Ok(nodes)
    }
}
