use std::collections::BTreeMap;
use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{run_episode, EpisodeResult, Planner};
use crate::error::{Error, Result};
use crate::sim::{Environment, SimConfig};

/// Published large-scale results (travel distance in meters, mean and
/// standard deviation, gap to the optimal planner in percent), shown next to
/// desk-scale numbers for context only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceRow {
    pub planner: &'static str,
    pub mean: f64,
    pub std: f64,
    pub gap_percent: f64,
}

pub const PUBLISHED_REFERENCE: [ReferenceRow; 7] = [
    ReferenceRow { planner: "Nearest", mean: 652.0, std: 76.0, gap_percent: 30.6 },
    ReferenceRow { planner: "Utility", mean: 585.0, std: 79.0, gap_percent: 17.2 },
    ReferenceRow { planner: "NBVP", mean: 645.0, std: 109.0, gap_percent: 29.2 },
    ReferenceRow { planner: "TARE Local", mean: 558.0, std: 67.0, gap_percent: 11.8 },
    ReferenceRow { planner: "ARiADNE", mean: 579.0, std: 82.0, gap_percent: 16.0 },
    ReferenceRow { planner: "DARE", mean: 563.0, std: 71.0, gap_percent: 12.8 },
    ReferenceRow { planner: "Optimal", mean: 499.0, std: 61.0, gap_percent: 0.0 },
];

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerSummary {
    pub planner: String,
    pub episodes: usize,
    pub completed: usize,
    /// Over completed episodes.
    pub mean: f64,
    pub std: f64,
    /// `(mean − oracle mean) / oracle mean`, when an oracle was run.
    pub gap_to_optimal: Option<f64>,
}

/// One-tailed paired t-test of "planner `a` travels farther than `b`".
#[derive(Clone, Debug, PartialEq)]
pub struct PairedTest {
    pub a: String,
    pub b: String,
    pub pairs: usize,
    pub mean_difference: f64,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    /// All paired differences identical: the statistic is undefined.
    pub zero_variance: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub planners: Vec<PlannerSummary>,
    /// `win_rate[(a, b)]`: fraction of commonly completed seeds where `a` is strictly shorter.
    pub win_rate: BTreeMap<(String, String), f64>,
    pub tests: Vec<PairedTest>,
    /// Episodes left out of the paired statistics.
    pub incomplete: Vec<(String, u64)>,
}

/// Paired one-tailed test on `a − b` (alternative: mean difference > 0).
pub fn paired_t_test(a: &[f64], b: &[f64]) -> (Option<f64>, Option<f64>, bool) {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if n < 2 {
        return (None, None, false);
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= f64::EPSILON * mean.abs().max(1.0) {
        return (None, None, true);
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    (Some(t), Some(1.0 - dist.cdf(t)), false)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

impl ComparisonReport {
    /// Aggregates episode results. Paired statistics use only seeds every
    /// involved planner completed; `reference` is the `b` side of the t-tests.
    pub fn from_results(results: &[EpisodeResult], reference: &str) -> Self {
        let mut names: Vec<String> = Vec::new();
        for r in results {
            if !names.contains(&r.planner) {
                names.push(r.planner.clone());
            }
        }
        let by_planner = |name: &str| -> BTreeMap<u64, &EpisodeResult> {
            results.iter().filter(|r| r.planner == name).map(|r| (r.seed, r)).collect()
        };
        let oracle_mean = {
            let d: Vec<f64> = results
                .iter()
                .filter(|r| r.planner == "oracle" && r.completed)
                .map(|r| r.distance)
                .collect();
            (!d.is_empty()).then(|| mean_std(&d).0)
        };
        let planners = names
            .iter()
            .map(|name| {
                let rs = by_planner(name);
                let done: Vec<f64> = rs.values().filter(|r| r.completed).map(|r| r.distance).collect();
                let (mean, std) = mean_std(&done);
                PlannerSummary {
                    planner: name.clone(),
                    episodes: rs.len(),
                    completed: done.len(),
                    mean,
                    std,
                    gap_to_optimal: oracle_mean.map(|o| (mean - o) / o),
                }
            })
            .collect();

        let paired = |a: &str, b: &str| -> (Vec<f64>, Vec<f64>) {
            let (ra, rb) = (by_planner(a), by_planner(b));
            ra.iter()
                .filter_map(|(s, x)| rb.get(s).filter(|y| x.completed && y.completed).map(|y| (x.distance, y.distance)))
                .unzip()
        };
        let mut win_rate = BTreeMap::new();
        for a in &names {
            for b in &names {
                if a == b {
                    continue;
                }
                let (da, db) = paired(a, b);
                if !da.is_empty() {
                    let wins = da.iter().zip(&db).filter(|(x, y)| x < y).count();
                    win_rate.insert((a.clone(), b.clone()), wins as f64 / da.len() as f64);
                }
            }
        }
        let tests = names
            .iter()
            .filter(|a| a.as_str() != reference && names.iter().any(|n| n == reference))
            .map(|a| {
                let (da, db) = paired(a, reference);
                let (t, p_value, zero_variance) = paired_t_test(&da, &db);
                let mean_difference = if da.is_empty() {
                    f64::NAN
                } else {
                    da.iter().zip(&db).map(|(x, y)| x - y).sum::<f64>() / da.len() as f64
                };
                PairedTest {
                    a: a.clone(),
                    b: reference.to_string(),
                    pairs: da.len(),
                    mean_difference,
                    t,
                    p_value,
                    zero_variance,
                }
            })
            .collect();
        let incomplete = results
            .iter()
            .filter(|r| !r.completed)
            .map(|r| (r.planner.clone(), r.seed))
            .collect();
        Self {
            planners,
            win_rate,
            tests,
            incomplete,
        }
    }

    pub fn summary(&self, name: &str) -> Option<&PlannerSummary> {
        self.planners.iter().find(|p| p.planner == name)
    }

    /// `#`-prefixed summary block appended to the results CSV.
    pub fn summary_lines(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# summary planner,episodes,completed,mean_m,std_m,gap_to_optimal");
        for p in &self.planners {
            let gap = p.gap_to_optimal.map_or("na".to_string(), |g| format!("{g:.4}"));
            let _ = writeln!(
                out,
                "# {},{},{},{:.3},{:.3},{}",
                p.planner, p.episodes, p.completed, p.mean, p.std, gap
            );
        }
        for ((a, b), w) in &self.win_rate {
            let _ = writeln!(out, "# win_rate {a} vs {b}: {w:.3}");
        }
        for t in &self.tests {
            if t.zero_variance {
                let _ = writeln!(out, "# t_test {} > {}: zero variance over {} pairs, undefined", t.a, t.b, t.pairs);
            } else {
                let fmt = |v: Option<f64>| v.map_or("na".to_string(), |v| format!("{v:.6}"));
                let _ = writeln!(
                    out,
                    "# t_test {} > {}: pairs {} t {} p {}",
                    t.a,
                    t.b,
                    t.pairs,
                    fmt(t.t),
                    fmt(t.p_value)
                );
            }
        }
        for (planner, seed) in &self.incomplete {
            let _ = writeln!(out, "# incomplete {planner} seed {seed}");
        }
        let _ = writeln!(out, "# published reference (100 m maps): planner,mean_m,std_m,gap_percent");
        for r in PUBLISHED_REFERENCE {
            let _ = writeln!(out, "# reference {},{},{},{}", r.planner, r.mean, r.std, r.gap_percent);
        }
        out
    }
}

/// Runs every planner on every seed (identical seed list for all planners).
pub fn compare(
    planners: &mut [Box<dyn Planner>],
    seeds: &[u64],
    cfg: &SimConfig,
    reference: &str,
) -> Result<(Vec<EpisodeResult>, ComparisonReport)> {
    if planners.len() < 2 || seeds.len() < 2 {
        return Err(Error::InvalidConfig("compare needs at least two planners and two seeds".into()));
    }
    let mut results = Vec::with_capacity(planners.len() * seeds.len());
    for &seed in seeds {
        let env = Environment::generate(seed, cfg)?;
        let budget = env.step_budget(cfg)?;
        for p in planners.iter_mut() {
            results.push(super::run_episode_with_budget(p.as_mut(), &env, cfg, budget)?);
        }
    }
    // planner-major row order
    let order: Vec<String> = planners.iter().map(|p| p.name().to_string()).collect();
    results.sort_by_key(|r| (order.iter().position(|n| *n == r.planner), seeds.iter().position(|&s| s == r.seed)));
    let report = ComparisonReport::from_results(&results, reference);
    Ok((results, report))
}

/// Runs a single planner on one seed with a freshly generated environment.
pub fn run_on_seed(planner: &mut dyn Planner, seed: u64, cfg: &SimConfig) -> Result<EpisodeResult> {
    let env = Environment::generate(seed, cfg)?;
    run_episode(planner, &env, cfg)
}

/// CSV text: header, one row per episode, then the summary block. Planning
/// time is written only when `timing` is set so that output stays reproducible.
pub fn write_results_csv(results: &[EpisodeResult], report: &ComparisonReport, timing: bool) -> String {
    let mut out = String::from("planner,seed,distance_m,steps,completed,plan_time_s\n");
    for r in results {
        let t = if timing { r.plan_time_s } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{:.6},{},{},{:.6}",
            r.planner, r.seed, r.distance, r.steps, r.completed, t
        );
    }
    out.push_str(&report.summary_lines());
    out
}

/// Parses the episode rows of a results CSV back into `(planner, seed, distance, steps, completed)`.
pub fn read_results_csv(text: &str) -> Result<Vec<(String, u64, f64, usize, bool)>> {
    let bad = |line: &str| Error::InvalidConfig(format!("malformed results row: {line}"));
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(line));
            }
            Ok((
                f[0].to_string(),
                f[1].parse().map_err(|_| bad(line))?,
                f[2].parse().map_err(|_| bad(line))?,
                f[3].parse().map_err(|_| bad(line))?,
                f[4].parse().map_err(|_| bad(line))?,
            ))
        })
        .collect()
}

/// Parses `a..b` (inclusive) or a comma-separated list of seeds.
pub fn parse_seed_list(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("bad seed list {s:?}: use `a..b` or `a,b,c`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    let seeds = s
        .split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}
