//! Compares the baselines and the oracle on a few seeds and prints the CSV report.

use explore_core::baselines::UtilityConfig;
use explore_core::eval::{compare, planner_by_name, write_results_csv, Planner};
use explore_core::sim::SimConfig;

fn main() -> explore_core::Result<()> {
    let cfg = SimConfig::default();
    let mut planners = ["oracle", "utility", "nearest"]
        .iter()
        .map(|n| planner_by_name(n, None, 0, &cfg, UtilityConfig::default()))
        .collect::<explore_core::Result<Vec<Box<dyn Planner>>>>()?;
    let (results, report) = compare(&mut planners, &[1001, 1002, 1003], &cfg, "oracle")?;
    print!("{}", report.summary_lines());
    print!("{}", write_results_csv(&results, &report, false));
    Ok(())
}
