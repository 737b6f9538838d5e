//! Command-line front end. Every flag can also be given in a JSON file
//! passed with `--config`; flags on the command line win.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::baselines::UtilityConfig;
use crate::dataset::{collect_demonstrations, DemonstrationSet};
use crate::diffusion::{DiffusionPolicy, PolicyConfig};
use crate::error::Error;
use crate::eval::{compare, planner_by_name, run_episode, trajectory_dump, write_results_csv, PLANNER_NAMES};
use crate::sim::{Environment, SimConfig};
use crate::training::{train, TrainConfig};
use crate::world::{write_pgm, PgmImage};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "explore", version, about = "Exploration workbench: maps, demonstrations, training, evaluation")]
pub struct Cli {
    /// JSON file with defaults for any flag (plus `sim`, `policy`, `train`, `utility` sections)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for stochastic components: network init, shuffling, policy sampling
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write ground-truth maps as `env_<seed>.pgm`
    GenMaps(GenMapsArgs),
    /// Roll out the oracle and write a demonstration dataset
    Demo(DemoArgs),
    /// Train the diffusion policy on a demonstration dataset
    Train(TrainArgs),
    /// Run one planner on one environment
    Explore(ExploreArgs),
    /// Run several planners on the same environments and report statistics
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenMapsArgs {
    /// Environment seeds: `a..b` (inclusive) or `a,b,c`
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Environment seeds; rejected environments are replaced by seeds past the end of the list
    #[arg(long)]
    pub envs: Option<String>,
    /// Output directory for demonstration files and `manifest.json`
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Small network and short schedule for one CPU core
    Desk,
    /// Full-size network and the 130-epoch protocol
    Full,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory written by `demo`
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory for `best.ckpt`, `last.ckpt` and `train_log.json`
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Network and schedule preset, refined by the `policy` and `train` config sections
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Use only the first N demonstrations
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    /// One of nearest, utility, dare, oracle
    #[arg(long)]
    pub planner: Option<String>,
    /// Environment seed
    #[arg(long)]
    pub env: Option<u64>,
    /// Policy checkpoint (required for dare)
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Directory for `trajectory.txt` and `belief.pgm` (default `explore_<env>`)
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated planner names
    #[arg(long)]
    pub planners: Option<String>,
    /// Environment seeds: `a..b` (inclusive) or `a,b,c`
    #[arg(long)]
    pub seeds: Option<String>,
    /// Results CSV path
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Policy checkpoint (required when dare is compared)
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Write measured planning times instead of zeros
    #[arg(long)]
    pub timing: bool,
    /// Planner every other planner is tested against (default: dare if present, else the first)
    #[arg(long)]
    pub reference: Option<String>,
}

/// Contents of a `--config` file. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub sim: Option<SimConfig>,
    pub policy: Option<PolicyConfig>,
    pub train: Option<TrainConfig>,
    pub utility: Option<UtilityConfig>,
    pub seeds: Option<String>,
    pub envs: Option<String>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub limit: Option<usize>,
    pub planner: Option<String>,
    pub env: Option<u64>,
    pub checkpoint: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub planners: Option<String>,
    pub csv: Option<PathBuf>,
    pub timing: Option<bool>,
    pub reference: Option<String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> CliResult<T> {
    flag.or(file)
        .ok_or_else(|| CliError::Usage(format!("missing --{name} (flag or config key)")))
}

fn planner_names(list: &str) -> CliResult<Vec<String>> {
    let names: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
    for n in &names {
        if !PLANNER_NAMES.contains(&n.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown planner `{n}`; expected one of {}",
                PLANNER_NAMES.join(", ")
            )));
        }
    }
    Ok(names)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path:?}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {path:?}: {e}")))
}

fn execute(cli: Cli) -> CliResult<()> {
    let file = load_config(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let sim = file.sim.clone().unwrap_or_default();
    sim.validate()?;
    match cli.command {
        Command::GenMaps(a) => gen_maps(a, file, &sim),
        Command::Demo(a) => demo(a, file, &sim),
        Command::Train(a) => train_cmd(a, file, seed),
        Command::Explore(a) => explore(a, file, &sim, seed),
        Command::Compare(a) => compare_cmd(a, file, &sim, seed),
    }
}

fn gen_maps(a: GenMapsArgs, file: FileConfig, sim: &SimConfig) -> CliResult<()> {
    let seeds = crate::eval::parse_seed_list(&required(a.seeds, file.seeds, "seeds")?)?;
    let out = required(a.out, file.out, "out")?;
    fs::create_dir_all(&out).map_err(Error::from)?;
    for seed in seeds {
        let env = Environment::generate(seed, sim)?;
        let path = out.join(format!("env_{seed}.pgm"));
        write_pgm(&path, &PgmImage::from_truth(&env.truth))?;
        println!(
            "{} free {:.3} start ({}, {})",
            path.display(),
            env.truth.free_fraction(),
            env.start.x,
            env.start.y
        );
    }
    Ok(())
}

fn demo(a: DemoArgs, file: FileConfig, sim: &SimConfig) -> CliResult<()> {
    let seeds = crate::eval::parse_seed_list(&required(a.envs, file.envs, "envs")?)?;
    let out = required(a.out, file.out, "out")?;
    let next = seeds.iter().max().copied().unwrap_or(0) + 1;
    let count = seeds.len();
    let (set, rejected) = collect_demonstrations(seeds.into_iter().chain(next..), count, sim, |m| eprintln!("{m}"))?;
    let manifest = set.save(&out, &rejected)?;
    println!(
        "{} demonstrations, {} windows, {} rejected; manifest {}",
        set.records.len(),
        set.window_count(),
        rejected.len(),
        manifest.display()
    );
    Ok(())
}

fn train_cmd(a: TrainArgs, file: FileConfig, seed: u64) -> CliResult<()> {
    let data = required(a.data, file.data, "data")?;
    let out = required(a.out, file.out, "out")?;
    let preset = a.preset.or(file.preset).unwrap_or(Preset::Desk);
    let mut policy_cfg = file.policy.unwrap_or(match preset {
        Preset::Desk => PolicyConfig::desk(),
        Preset::Full => PolicyConfig::default(),
    });
    let mut cfg = file.train.unwrap_or(match preset {
        Preset::Desk => TrainConfig::desk(),
        Preset::Full => TrainConfig::full(),
    });
    cfg.seed = seed;
    if let Some(e) = a.epochs.or(file.epochs) {
        cfg.epochs = e;
    }
    if let Some(b) = a.batch_size.or(file.batch_size) {
        cfg.batch_size = b;
    }
    if let Some(lr) = a.lr.or(file.lr) {
        cfg.learning_rate = lr;
    }
    cfg.validate()?;
    let mut set = DemonstrationSet::load(&data)?;
    if let Some(n) = a.limit.or(file.limit) {
        set = set.truncated(n);
    }
    policy_cfg.sensor_range = set.sim.sensor.range;
    let mut policy = DiffusionPolicy::new(policy_cfg, seed)?;
    eprintln!(
        "{} demonstrations, {} windows, {} parameters",
        set.records.len(),
        set.window_count(),
        policy.params.scalar_count()
    );
    let report = train(&set, &mut policy, &cfg, Some(&out), |e| {
        println!("epoch {} loss {:.5} lr {:.2e} ({:.1} s)", e.epoch, e.mean_loss, e.learning_rate, e.seconds)
    })?;
    fs::write(
        out.join("train_log.json"),
        serde_json::to_string_pretty(&report).map_err(Error::from)?,
    )
    .map_err(Error::from)?;
    println!("best epoch {} loss {:.5}", report.best_epoch, report.best_loss);
    Ok(())
}

fn explore(a: ExploreArgs, file: FileConfig, sim: &SimConfig, seed: u64) -> CliResult<()> {
    let name = required(a.planner, file.planner, "planner")?;
    planner_names(&name)?;
    let env_seed = required(a.env, file.env, "env")?;
    let checkpoint = a.checkpoint.or(file.checkpoint);
    let utility = file.utility.unwrap_or_default();
    let mut planner = planner_by_name(&name, checkpoint.as_deref(), seed, sim, utility)?;
    let env = Environment::generate(env_seed, sim)?;
    let result = run_episode(planner.as_mut(), &env, sim)?;
    let dir = a
        .record
        .or(file.record)
        .unwrap_or_else(|| PathBuf::from(format!("explore_{env_seed}")));
    fs::create_dir_all(&dir).map_err(Error::from)?;
    fs::write(dir.join("trajectory.txt"), trajectory_dump(&result, env.truth.resolution())).map_err(Error::from)?;
    write_pgm(&dir.join("belief.pgm"), &PgmImage::from_belief(&result.belief))?;
    println!(
        "planner {} env {} distance_m {:.3} steps {} completed {} explored {:.4}",
        result.planner,
        result.seed,
        result.distance,
        result.steps,
        result.completed,
        result.explored.last().copied().unwrap_or(0.0)
    );
    println!("trajectory written to {}", dir.display());
    Ok(())
}

fn compare_cmd(a: CompareArgs, file: FileConfig, sim: &SimConfig, seed: u64) -> CliResult<()> {
    let names = planner_names(&required(a.planners, file.planners, "planners")?)?;
    let seeds = crate::eval::parse_seed_list(&required(a.seeds, file.seeds, "seeds")?)?;
    let checkpoint = a.checkpoint.or(file.checkpoint);
    let utility = file.utility.unwrap_or_default();
    let timing = a.timing || file.timing.unwrap_or(false);
    let reference = a.reference.or(file.reference).unwrap_or_else(|| {
        if names.iter().any(|n| n == "dare") {
            "dare".into()
        } else {
            names[0].clone()
        }
    });
    if !names.contains(&reference) {
        return Err(CliError::Usage(format!("reference `{reference}` is not among the compared planners")));
    }
    let mut planners = names
        .iter()
        .map(|n| planner_by_name(n, checkpoint.as_deref(), seed, sim, utility))
        .collect::<crate::Result<Vec<_>>>()?;
    let (results, report) = compare(&mut planners, &seeds, sim, &reference)?;
    let csv = write_results_csv(&results, &report, timing);
    match a.csv.or(file.csv) {
        Some(path) => {
            fs::write(&path, &csv).map_err(Error::from)?;
            print!("{}", report.summary_lines());
            println!("results written to {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
