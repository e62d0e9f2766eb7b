use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::fmt_f64;
use crate::error::{Error, Result};
use crate::mdp::{run_episode, train_episode, Agent, Environment};
use crate::registry::Registry;
use crate::rng::{derive_seed, Purpose};

pub const RUN_HEADER: &str = "seed,episode,mean_return,params,elapsed_ms";
pub const AGGREGATE_HEADER: &str = "episode,mean_return,std_return,params,seeds,failed_seeds";

/// One evaluation point of one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    /// Training episodes completed before this evaluation.
    pub episode: u64,
    pub mean_return: f64,
    pub params: usize,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub records: Vec<RunRecord>,
    /// Set when training aborted; `records` holds what was evaluated before.
    pub failure: Option<String>,
}

impl SeedOutcome {
    pub fn final_return(&self) -> Option<f64> {
        self.records.last().map(|r| r.mean_return)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub name: String,
    pub environment: String,
    pub agent: String,
    pub params: usize,
    pub seeds: Vec<SeedOutcome>,
}

impl ExperimentOutcome {
    pub fn failed(&self) -> Vec<&SeedOutcome> {
        self.seeds.iter().filter(|s| s.failure.is_some()).collect()
    }

    /// Final returns of the seeds that finished.
    pub fn final_returns(&self) -> Vec<f64> {
        self.seeds
            .iter()
            .filter(|s| s.failure.is_none())
            .filter_map(SeedOutcome::final_return)
            .collect()
    }

    /// Rows of the aggregate CSV: per evaluation episode, mean and sample
    /// standard deviation over the seeds that finished.
    pub fn aggregate(&self) -> Vec<(u64, f64, f64, usize)> {
        let done: Vec<&SeedOutcome> = self.seeds.iter().filter(|s| s.failure.is_none()).collect();
        let Some(first) = done.first() else {
            return Vec::new();
        };
        first
            .records
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let xs: Vec<f64> = done.iter().map(|s| s.records[i].mean_return).collect();
                let (mean, std) = mean_std(&xs);
                (rec.episode, mean, std, xs.len())
            })
            .collect()
    }
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn evaluate(env: &mut dyn Environment, agent: &dyn Agent, seed: u64, episodes: u64) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..episodes {
        total += run_episode(env, agent, 0.0, derive_seed(seed, Purpose::Eval, j))?.ret;
    }
    Ok(total / episodes as f64)
}

/// Trains one agent from scratch on `seed`, evaluating greedily at episode
/// 0, every `eval_every` episodes, and after the last episode.
pub fn run_seed(config: &ExperimentConfig, registry: &Registry, seed: u64) -> Result<SeedOutcome> {
    let mut env = registry.make_environment(&config.environment.id, &config.environment.params)?;
    let mut eval_env =
        registry.make_environment(&config.environment.id, &config.environment.params)?;
    let mut agent =
        registry.make_agent(&config.agent.id, &config.agent.params, env.space(), seed)?;
    let params = agent.param_count();
    let start = Instant::now();
    let elapsed = |start: &Instant| {
        if config.record_wall_clock {
            start.elapsed().as_millis() as u64
        } else {
            0
        }
    };

    let mut records = Vec::new();
    let mut record =
        |episode: u64, agent: &dyn Agent, eval_env: &mut dyn Environment| -> Result<()> {
            let mean_return = evaluate(eval_env, agent, seed, config.eval_episodes)?;
            records.push(RunRecord {
                seed,
                episode,
                mean_return,
                params,
                elapsed_ms: elapsed(&start),
            });
            Ok(())
        };

    record(0, agent.as_ref(), eval_env.as_mut())?;
    for ep in 0..config.episodes {
        let eps = config.exploration.epsilon(ep);
        let trained = train_episode(
            env.as_mut(),
            agent.as_mut(),
            eps,
            derive_seed(seed, Purpose::Train, ep),
        );
        match trained {
            Ok(_) => {}
            Err(e @ Error::Divergence { .. }) => {
                return Ok(SeedOutcome {
                    seed,
                    records,
                    failure: Some(format!("episode {ep}: {e}")),
                });
            }
            Err(e) => return Err(e),
        }
        let done = ep + 1;
        if done % config.eval_every == 0 || done == config.episodes {
            record(done, agent.as_ref(), eval_env.as_mut())?;
        }
    }
    debug_assert!(records.iter().all(|r| r.params == agent.param_count()));
    Ok(SeedOutcome {
        seed,
        records,
        failure: None,
    })
}

/// Runs every seed (in parallel) and, if `out_dir` is given, writes
/// `<out_dir>/<name>/seed_<seed>.csv` and `aggregate.csv`.
pub fn run_experiment(
    config: &ExperimentConfig,
    registry: &Registry,
    out_dir: Option<&Path>,
) -> Result<ExperimentOutcome> {
    config.validate(registry)?;
    let env = registry.make_environment(&config.environment.id, &config.environment.params)?;
    let params = registry
        .make_agent(
            &config.agent.id,
            &config.agent.params,
            env.space(),
            config.seeds[0],
        )?
        .param_count();
    let seeds = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, registry, seed))
        .collect::<Result<Vec<_>>>()?;
    let outcome = ExperimentOutcome {
        name: config.name(),
        environment: config.environment.id.clone(),
        agent: config.agent.id.clone(),
        params,
        seeds,
    };
    if let Some(dir) = out_dir {
        write_outputs(&outcome, &dir.join(&outcome.name))?;
    }
    Ok(outcome)
}

pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for s in &outcome.seeds {
        let mut text = String::from(RUN_HEADER);
        text.push('\n');
        for r in &s.records {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                r.seed,
                r.episode,
                fmt_f64(r.mean_return),
                r.params,
                r.elapsed_ms
            ));
        }
        fs::write(dir.join(format!("seed_{}.csv", s.seed)), text)?;
    }
    let failed = outcome.failed().len();
    let mut text = String::from(AGGREGATE_HEADER);
    text.push('\n');
    for (episode, mean, std, n) in outcome.aggregate() {
        text.push_str(&format!(
            "{episode},{},{},{},{n},{failed}\n",
            fmt_f64(mean),
            fmt_f64(std),
            outcome.params
        ));
    }
    fs::write(dir.join("aggregate.csv"), text)?;
    Ok(())
}
