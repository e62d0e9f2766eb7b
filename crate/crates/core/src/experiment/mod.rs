//! Config-driven experiments: train, evaluate, compare, solve.

mod compare;
mod config;
mod runner;
mod solve;

pub use compare::{compare, write_comparison, ComparisonRow, COMPARISON_HEADER};
pub use config::{Component, ExperimentConfig, SCHEMA_VERSION};
pub use runner::{
    run_experiment, run_seed, write_outputs, ExperimentOutcome, RunRecord, SeedOutcome,
    AGGREGATE_HEADER, RUN_HEADER,
};
pub use solve::{param_report, solve, ParamReport, SolveReport};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
