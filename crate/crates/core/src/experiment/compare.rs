use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::ExperimentConfig;
use super::fmt_f64;
use super::runner::{mean_std, run_experiment, ExperimentOutcome};
use crate::error::Result;
use crate::registry::Registry;

pub const COMPARISON_HEADER: &str = "environment,agent,mean_final_return,std_final_return,params";

/// One line of a Table-1 style comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub environment: String,
    pub agent: String,
    pub mean_final_return: f64,
    pub std_final_return: f64,
    pub params: usize,
    pub failed_seeds: usize,
}

impl ComparisonRow {
    fn from_outcome(outcome: &ExperimentOutcome) -> Self {
        let (mean, std) = mean_std(&outcome.final_returns());
        ComparisonRow {
            name: outcome.name.clone(),
            environment: outcome.environment.clone(),
            agent: outcome.agent.clone(),
            mean_final_return: mean,
            std_final_return: std,
            params: outcome.params,
            failed_seeds: outcome.failed().len(),
        }
    }
}

/// Runs each config in the given order and summarises the final returns.
pub fn compare(
    configs: &[ExperimentConfig],
    registry: &Registry,
    out_dir: Option<&Path>,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::with_capacity(configs.len());
    for c in configs {
        rows.push(ComparisonRow::from_outcome(&run_experiment(
            c, registry, out_dir,
        )?));
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("comparison.csv"), comparison_csv(&rows))?;
    }
    Ok(rows)
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = format!("{COMPARISON_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.environment,
            r.agent,
            fmt_f64(r.mean_final_return),
            fmt_f64(r.std_final_return),
            r.params
        );
    }
    s
}

/// Human-readable table for the console.
pub fn write_comparison(rows: &[ComparisonRow]) -> String {
    let mut s = format!(
        "{:<12} {:<8} {:>12} {:>10} {:>10}\n",
        "environment", "agent", "return", "std", "params"
    );
    for r in rows {
        let _ = write!(
            s,
            "{:<12} {:<8} {:>12.2} {:>10.2} {:>10}",
            r.environment, r.agent, r.mean_final_return, r.std_final_return, r.params
        );
        if r.failed_seeds > 0 {
            let _ = write!(s, "  ({} seeds failed)", r.failed_seeds);
        }
        s.push('\n');
    }
    s
}
