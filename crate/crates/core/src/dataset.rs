//! Oracle demonstrations, their on-disk format and behavior-cloning windows.
//!
//! A demonstration file is `EXPLDEMO`, a little-endian `u32` version and the
//! record body; a `manifest.json` next to the files indexes a dataset.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::baselines::step_toward;
use crate::diffusion::{encode_actions, ActionIndex, HorizonConfig};
use crate::encoder::{node_features, EdgeMask, GraphInput};
use crate::error::{Error, Result};
use crate::eval::OraclePlanner;
use crate::graph::InformativeGraph;
use crate::sim::{Environment, Episode, SimConfig};
use crate::world::{Cell, Point};

const MAGIC: &[u8; 8] = b"EXPLDEMO";
const VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

/// The informative graph as the robot saw it at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSnapshot {
    pub cells: Vec<Cell>,
    pub utility: Vec<u32>,
    pub guidepost: Vec<bool>,
    pub edges: Vec<(u32, u32)>,
    pub current: u32,
}

impl GraphSnapshot {
    pub fn from_graph(graph: &InformativeGraph) -> Self {
        Self {
            cells: graph.base.cells().to_vec(),
            utility: graph.utility.clone(),
            guidepost: graph.guidepost.clone(),
            edges: graph.base.edges().map(|(i, j)| (i as u32, j as u32)).collect(),
            current: graph.current() as u32,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Encoder input, identical to [`GraphInput::new`] on the live graph.
    pub fn to_input(&self, resolution: f64, sensor_range: f64, utility_cap: f64) -> GraphInput {
        let positions: Vec<Point> = self
            .cells
            .iter()
            .map(|c| Point::new((c.x as f64 + 0.5) * resolution, (c.y as f64 + 0.5) * resolution))
            .collect();
        let current = self.current as usize;
        GraphInput {
            features: node_features(&positions, &self.utility, &self.guidepost, current, sensor_range, utility_cap),
            mask: EdgeMask::from_edges(self.len(), self.edges.iter().map(|&(i, j)| (i as usize, j as usize))),
            current,
        }
    }
}

/// One expert step: what was observed and what was done.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoStep {
    pub graph: GraphSnapshot,
    /// Robot cell before the action (the snapshot's current node).
    pub robot: Cell,
    pub action: ActionIndex,
    /// Oracle coverage cost remaining before the action (meters).
    pub remaining_cost: f64,
}

/// One expert rollout from the environment's start to full exploration.
#[derive(Clone, Debug, PartialEq)]
pub struct DemonstrationRecord {
    pub seed: u64,
    /// Meters per cell.
    pub resolution: f64,
    /// Lattice spacing in cells.
    pub spacing: usize,
    pub start: Cell,
    /// Oracle coverage cost from the start scan (meters).
    pub initial_cost: f64,
    pub distance: f64,
    pub steps: Vec<DemoStep>,
}

impl DemonstrationRecord {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Robot cells, start first, replaying the recorded actions.
    pub fn replay(&self) -> Vec<Cell> {
        let mut cur = self.start;
        let mut out = vec![cur];
        for s in &self.steps {
            let (dx, dy) = s.action.offset(self.spacing);
            cur = Cell::new(cur.x + dx, cur.y + dy);
            out.push(cur);
        }
        out
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        w.write_f64::<LittleEndian>(self.resolution)?;
        w.write_u32::<LittleEndian>(self.spacing as u32)?;
        write_cell(w, self.start)?;
        w.write_f64::<LittleEndian>(self.initial_cost)?;
        w.write_f64::<LittleEndian>(self.distance)?;
        w.write_u32::<LittleEndian>(self.steps.len() as u32)?;
        for s in &self.steps {
            let g = &s.graph;
            w.write_u32::<LittleEndian>(g.len() as u32)?;
            for i in 0..g.len() {
                write_cell(w, g.cells[i])?;
                w.write_u32::<LittleEndian>(g.utility[i])?;
                w.write_u8(u8::from(g.guidepost[i]))?;
            }
            w.write_u32::<LittleEndian>(g.edges.len() as u32)?;
            for &(i, j) in &g.edges {
                w.write_u32::<LittleEndian>(i)?;
                w.write_u32::<LittleEndian>(j)?;
            }
            w.write_u32::<LittleEndian>(g.current)?;
            write_cell(w, s.robot)?;
            w.write_u8(s.action.ix)?;
            w.write_u8(s.action.iy)?;
            w.write_f64::<LittleEndian>(s.remaining_cost)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    pub fn read(r: &mut impl Read, path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            what: "demonstration",
            path: path.to_path_buf(),
            reason,
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let seed = r.read_u64::<LittleEndian>()?;
        let resolution = r.read_f64::<LittleEndian>()?;
        let spacing = r.read_u32::<LittleEndian>()? as usize;
        let start = read_cell(r)?;
        let initial_cost = r.read_f64::<LittleEndian>()?;
        let distance = r.read_f64::<LittleEndian>()?;
        let n = r.read_u32::<LittleEndian>()? as usize;
        let mut steps = Vec::with_capacity(n);
        for _ in 0..n {
            let m = r.read_u32::<LittleEndian>()? as usize;
            let mut g = GraphSnapshot {
                cells: Vec::with_capacity(m),
                utility: Vec::with_capacity(m),
                guidepost: Vec::with_capacity(m),
                edges: Vec::new(),
                current: 0,
            };
            for _ in 0..m {
                g.cells.push(read_cell(r)?);
                g.utility.push(r.read_u32::<LittleEndian>()?);
                g.guidepost.push(r.read_u8()? != 0);
            }
            let e = r.read_u32::<LittleEndian>()? as usize;
            for _ in 0..e {
                let (i, j) = (r.read_u32::<LittleEndian>()?, r.read_u32::<LittleEndian>()?);
                if i as usize >= m || j as usize >= m {
                    return Err(bad(format!("edge ({i}, {j}) out of range")));
                }
                g.edges.push((i, j));
            }
            g.current = r.read_u32::<LittleEndian>()?;
            if g.current as usize >= m {
                return Err(bad(format!("current node {} out of range", g.current)));
            }
            let robot = read_cell(r)?;
            let (ix, iy) = (r.read_u8()?, r.read_u8()?);
            if ix >= 5 || iy >= 5 {
                return Err(bad(format!("action ({ix}, {iy}) out of range")));
            }
            let remaining_cost = r.read_f64::<LittleEndian>()?;
            steps.push(DemoStep {
                graph: g,
                robot,
                action: ActionIndex::new(ix, iy),
                remaining_cost,
            });
        }
        Ok(Self {
            seed,
            resolution,
            spacing,
            start,
            initial_cost,
            distance,
            steps,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(&mut BufReader::new(File::open(path)?), path)
    }
}

fn write_cell(w: &mut impl Write, c: Cell) -> std::io::Result<()> {
    w.write_i32::<LittleEndian>(c.x)?;
    w.write_i32::<LittleEndian>(c.y)
}

fn read_cell(r: &mut impl Read) -> std::io::Result<Cell> {
    Ok(Cell::new(r.read_i32::<LittleEndian>()?, r.read_i32::<LittleEndian>()?))
}

/// Runs the oracle with `T_a = 1` from the start of `env` until the map is
/// explored, recording every observation and action.
pub fn rollout_expert(env: &Environment, cfg: &SimConfig) -> Result<DemonstrationRecord> {
    let reject = |reason: String| Error::Rejected { seed: env.seed, reason };
    let budget = env.step_budget(cfg)?;
    let oracle = OraclePlanner::new(cfg.oracle.restarts);
    let mut ep = Episode::new(env, cfg)?;
    let mut steps = Vec::new();
    let mut initial_cost = None;
    while !ep.is_complete() {
        if ep.steps() >= budget {
            return Err(reject(format!("step budget of {budget} exhausted")));
        }
        let graph = ep.observe()?;
        let plan = match oracle.coverage(&ep) {
            Ok(Some(p)) => p,
            Ok(None) => return Err(reject("free space left but no frontier to cover".into())),
            Err(Error::UncoverableFrontier(c)) => {
                return Err(reject(format!("frontier ({}, {}) cannot be covered", c.x, c.y)))
            }
            Err(e) => return Err(e),
        };
        initial_cost.get_or_insert(plan.cost);
        let target = env.oracle.graph().cell(plan.route.get(1).copied().unwrap_or(plan.route[0]));
        let to = step_toward(&graph, target)?;
        let robot = ep.robot();
        let action = ActionIndex::between(robot, graph.base.cell(to), cfg.dungeon.lattice_spacing)
            .ok_or_else(|| reject(format!("move to node {to} leaves the 5x5 block")))?;
        steps.push(DemoStep {
            graph: GraphSnapshot::from_graph(&graph),
            robot,
            action,
            remaining_cost: plan.cost,
        });
        ep.step(&graph.base, to)?;
    }
    Ok(DemonstrationRecord {
        seed: env.seed,
        resolution: env.truth.resolution(),
        spacing: cfg.dungeon.lattice_spacing,
        start: env.start,
        initial_cost: initial_cost.unwrap_or(0.0),
        distance: ep.distance(),
        steps,
    })
}

/// One behavior-cloning sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    /// Step index the window is anchored at.
    pub t: usize,
    /// Record steps whose graphs form the observation window, oldest first.
    pub obs: Vec<usize>,
    /// `T_p × 10` target actions.
    pub actions: Array2<f64>,
}

/// Action at slot `j` of the window anchored at `t`: the step executed at
/// `τ = t − T_o + 1 + j`, or stay when `τ` falls outside the record.
pub fn window_actions(record: &DemonstrationRecord, t: usize, horizon: &HorizonConfig) -> Vec<ActionIndex> {
    (0..horizon.pred)
        .map(|j| {
            let tau = t as i64 - horizon.obs as i64 + 1 + j as i64;
            if tau < 0 || tau >= record.len() as i64 {
                ActionIndex::STAY
            } else {
                record.steps[tau as usize].action
            }
        })
        .collect()
}

/// One window per recorded step. Observations before the start repeat the
/// first snapshot.
pub fn make_windows(record: &DemonstrationRecord, horizon: &HorizonConfig) -> Vec<Window> {
    (0..record.len())
        .map(|t| Window {
            t,
            obs: (0..horizon.obs)
                .map(|i| (t + 1 + i).saturating_sub(horizon.obs))
                .collect(),
            actions: encode_actions(&window_actions(record, t, horizon)),
        })
        .collect()
}

/// Index entry for one demonstration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub seed: u64,
    pub file: String,
    pub steps: usize,
    pub distance_m: f64,
    pub oracle_cost_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub sim: SimConfig,
    pub demos: Vec<ManifestEntry>,
    /// Seeds tried and rejected while filling the dataset.
    pub rejected: Vec<u64>,
}

/// In-memory dataset with its simulator settings.
#[derive(Clone, Debug)]
pub struct DemonstrationSet {
    pub sim: SimConfig,
    pub records: Vec<DemonstrationRecord>,
}

impl DemonstrationSet {
    pub fn window_count(&self) -> usize {
        self.records.iter().map(DemonstrationRecord::len).sum()
    }

    /// Keeps the first `n` records.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            sim: self.sim.clone(),
            records: self.records.iter().take(n).cloned().collect(),
        }
    }

    /// Writes `demo_<seed>.bin` files and the manifest into `dir`.
    pub fn save(&self, dir: &Path, rejected: &[u64]) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let mut demos = Vec::with_capacity(self.records.len());
        for r in &self.records {
            let file = format!("demo_{}.bin", r.seed);
            r.save(&dir.join(&file))?;
            demos.push(ManifestEntry {
                seed: r.seed,
                file,
                steps: r.len(),
                distance_m: r.distance,
                oracle_cost_m: r.initial_cost,
            });
        }
        let manifest = Manifest {
            version: VERSION,
            sim: self.sim.clone(),
            demos,
            rejected: rejected.to_vec(),
        };
        let path = dir.join(MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
        let records = manifest
            .demos
            .iter()
            .map(|e| {
                let r = DemonstrationRecord::load(&dir.join(&e.file))?;
                if r.seed != e.seed || r.len() != e.steps {
                    return Err(Error::Format {
                        what: "demonstration",
                        path: dir.join(&e.file),
                        reason: "does not match the manifest entry".into(),
                    });
                }
                Ok(r)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            sim: manifest.sim,
            records,
        })
    }
}

/// Rolls out the oracle on `seeds` in order until `count` demonstrations
/// are collected. Rejected seeds are skipped and returned.
pub fn collect_demonstrations(
    seeds: impl IntoIterator<Item = u64>,
    count: usize,
    cfg: &SimConfig,
    mut log: impl FnMut(&str),
) -> Result<(DemonstrationSet, Vec<u64>)> {
    let mut records = Vec::with_capacity(count);
    let mut rejected = Vec::new();
    let mut seeds = seeds.into_iter();
    while records.len() < count {
        let seed = seeds
            .next()
            .ok_or_else(|| Error::InvalidConfig(format!("ran out of seeds after {} demonstrations", records.len())))?;
        let outcome = Environment::generate(seed, cfg).and_then(|env| rollout_expert(&env, cfg));
        match outcome {
            Ok(r) => {
                log(&format!("seed {seed}: {} steps, {:.1} m", r.len(), r.distance));
                records.push(r);
            }
            Err(e @ (Error::Rejected { .. } | Error::GenerationFailed { .. })) => {
                log(&format!("seed {seed}: {e}"));
                rejected.push(seed);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((
        DemonstrationSet {
            sim: cfg.clone(),
            records,
        },
        rejected,
    ))
}
