use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use super::config::{Component, ExperimentConfig};
use crate::error::{Error, Result};
use crate::mdp::StateActionSpace;
use crate::registry::Registry;
use crate::solver::{backward_induction, OptimalSolution};
use crate::tensor_csv::write_solution;

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub environment: String,
    pub space: StateActionSpace,
    pub solution: OptimalSolution,
}

/// Backward induction on an environment's explicit dynamics. Writes
/// `q_star.csv` and `policy.csv` into `out_dir` when given.
pub fn solve(
    environment: &Component,
    registry: &Registry,
    out_dir: Option<&Path>,
) -> Result<SolveReport> {
    let env = registry.make_environment(&environment.id, &environment.params)?;
    let dynamics = env
        .explicit_dynamics()
        .ok_or_else(|| Error::OracleUnavailable(environment.id.clone()))?;
    let space = env.space().clone();
    let solution = backward_induction(&dynamics, space.horizon())?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let q = BufWriter::new(File::create(dir.join("q_star.csv"))?);
        let p = BufWriter::new(File::create(dir.join("policy.csv"))?);
        write_solution(q, p, &space, &solution)?;
    }
    Ok(SolveReport {
        environment: environment.id.clone(),
        space,
        solution,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamReport {
    pub environment: String,
    pub agent: String,
    pub params: usize,
    /// T·|S|·|A|
    pub dense_fh_table: usize,
}

pub fn param_report(config: &ExperimentConfig, registry: &Registry) -> Result<ParamReport> {
    let env = registry.make_environment(&config.environment.id, &config.environment.params)?;
    let seed = config.seeds.first().copied().unwrap_or(0);
    let agent = registry.make_agent(&config.agent.id, &config.agent.params, env.space(), seed)?;
    Ok(ParamReport {
        environment: config.environment.id.clone(),
        agent: config.agent.id.clone(),
        params: agent.param_count(),
        dense_fh_table: env.space().dense_fh_size(),
    })
}
