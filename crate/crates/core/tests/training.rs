use std::sync::OnceLock;

use explore_core::dataset::{rollout_expert, DemonstrationSet};
use explore_core::diffusion::{DiffusionPolicy, HorizonConfig, PolicyConfig, PredictorConfig};
use explore_core::encoder::EncoderConfig;
use explore_core::nn::Tape;
use explore_core::sim::{Environment, SimConfig};
use explore_core::training::{train, PreparedData, TrainConfig, BEST_CHECKPOINT, LAST_CHECKPOINT};
use explore_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_policy(seed: u64) -> DiffusionPolicy {
    let cfg = PolicyConfig {
        encoder: EncoderConfig { dim: 16, layers: 1, ffn_mult: 2, utility_cap: 50.0 },
        predictor: PredictorConfig { dim: 32, blocks: 1, ffn_mult: 2 },
        horizon: HorizonConfig::default(),
        ..PolicyConfig::default()
    };
    DiffusionPolicy::new(cfg, seed).unwrap()
}

fn demo_set() -> &'static DemonstrationSet {
    static SET: OnceLock<DemonstrationSet> = OnceLock::new();
    SET.get_or_init(|| {
        let sim = SimConfig::default();
        let env = Environment::generate(1, &sim).unwrap();
        let rec = rollout_expert(&env, &sim).unwrap();
        DemonstrationSet { sim, records: vec![rec] }
    })
}

fn single_step_set() -> DemonstrationSet {
    let mut set = demo_set().clone();
    set.records[0].steps.truncate(1);
    set
}

#[test]
fn overfits_a_single_window() {
    let set = single_step_set();
    let mut policy = DiffusionPolicy::new(PolicyConfig::desk(), 1).unwrap();
    let cfg = TrainConfig {
        epochs: 1500,
        batch_size: 1,
        learning_rate: 3e-3,
        weight_decay: 0.0,
        draws_per_sample: 8,
        warmup_iters: 20,
        ..TrainConfig::desk()
    };
    train(&set, &mut policy, &cfg, None, |_| {}).unwrap();

    // fresh draws on the trained parameters
    let data = PreparedData::new(&set, &policy);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut t = Tape::new();
    let cond = policy.condition(&mut t, &data.observation(0), true);
    let draws = policy.sample_draws(256, &mut rng);
    let loss = policy.training_loss(&mut t, cond, &data.windows[0].1.actions, &draws);
    let value = t.value(loss)[[0, 0]];
    assert!(value < 0.01, "held-out loss {value}");
}

#[test]
fn zero_learning_rate_leaves_parameters_alone() {
    let set = single_step_set();
    let mut policy = small_policy(2);
    let before = policy.params.clone();
    let cfg = TrainConfig { epochs: 2, learning_rate: 0.0, ..TrainConfig::desk() };
    train(&set, &mut policy, &cfg, None, |_| {}).unwrap();
    for id in 0..before.len() {
        assert_eq!(before.value(id), policy.params.value(id), "{}", before.name(id));
    }
}

#[test]
fn fixed_seed_reproduces_the_loss_curve_and_checkpoints() {
    let set = demo_set().truncated(1);
    let cfg = TrainConfig { epochs: 2, batch_size: 8, ..TrainConfig::desk() };
    let dir = tempfile::tempdir().unwrap();
    let mut a = small_policy(3);
    let ra = train(&set, &mut a, &cfg, Some(dir.path()), |_| {}).unwrap();
    let mut b = small_policy(3);
    let rb = train(&set, &mut b, &cfg, None, |_| {}).unwrap();
    let la: Vec<f64> = ra.epochs.iter().map(|e| e.mean_loss).collect();
    let lb: Vec<f64> = rb.epochs.iter().map(|e| e.mean_loss).collect();
    assert_eq!(la, lb);
    assert_eq!(ra.iterations, 2 * set.window_count().div_ceil(8));

    let best = DiffusionPolicy::load(&dir.path().join(BEST_CHECKPOINT)).unwrap();
    assert!(dir.path().join(LAST_CHECKPOINT).exists());
    for id in 0..a.params.len() {
        let diff = (best.params.value(id) - a.params.value(id)).mapv(f64::abs).sum();
        // checkpoints store f32
        assert!(diff <= 1e-5 * a.params.value(id).len() as f64);
    }
}

#[test]
fn non_finite_loss_aborts_training() {
    let set = single_step_set();
    let mut policy = small_policy(4);
    let id = policy.params.id("pred.out.b").unwrap();
    policy.params.value_mut(id)[[0, 0]] = f64::NAN;
    let cfg = TrainConfig { epochs: 3, ..TrainConfig::desk() };
    assert!(matches!(train(&set, &mut policy, &cfg, None, |_| {}), Err(Error::Diverged { epoch: 1, .. })));
}

#[test]
fn invalid_settings_are_rejected() {
    let set = single_step_set();
    let mut policy = small_policy(5);
    for cfg in [
        TrainConfig { epochs: 0, ..TrainConfig::desk() },
        TrainConfig { batch_size: 0, ..TrainConfig::desk() },
        TrainConfig { learning_rate: -1.0, ..TrainConfig::desk() },
    ] {
        assert!(matches!(train(&set, &mut policy, &cfg, None, |_| {}), Err(Error::InvalidConfig(_))));
    }
    let empty = DemonstrationSet { sim: set.sim.clone(), records: vec![] };
    assert!(train(&empty, &mut policy, &TrainConfig::desk(), None, |_| {}).is_err());
}

#[test]
fn schedule_warms_up_then_decays() {
    let cfg = TrainConfig::desk();
    assert!((cfg.learning_rate_at(0, 1000) - cfg.learning_rate / 100.0).abs() < 1e-9);
    assert!(cfg.learning_rate_at(99, 1000) > cfg.learning_rate_at(50, 1000));
    assert!(cfg.learning_rate_at(999, 1000) < 1e-5);
    let flat = TrainConfig { warmup_iters: 0, cosine_decay: false, ..cfg };
    assert_eq!(flat.learning_rate_at(500, 1000), flat.learning_rate);
}
