use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use fhtlr::experiment::{self, param_report, ExperimentConfig};
use fhtlr::Registry;

#[derive(Parser)]
#[command(
    name = "fhtlr",
    version,
    about = "Finite-horizon low-rank Q-learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate one agent over the configured seeds.
    Train {
        #[command(flatten)]
        common: Common,
        /// Record measured wall-clock in `elapsed_ms` (breaks byte-identical reruns).
        #[arg(long)]
        wall_clock: bool,
    },
    /// Run several configs and print a comparison table.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the configured environment exactly by backward induction.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Print parameter counts for the configured agent.
    Params {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML). `compare` and `params` accept it repeatedly.
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
    /// Override the configured seeds: one integer or a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long, env = "FHTLR_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<Vec<ExperimentConfig>> {
        self.configs
            .iter()
            .map(|p| {
                let mut c = ExperimentConfig::load(p)?;
                if let Some(seeds) = &self.seed {
                    c.seeds = seeds.clone();
                }
                Ok(c)
            })
            .collect()
    }

    fn single(&self) -> Result<ExperimentConfig> {
        let mut configs = self.load()?;
        if configs.len() != 1 {
            bail!("this subcommand takes exactly one --config");
        }
        Ok(configs.remove(0))
    }
}

fn train(common: &Common, wall_clock: bool, registry: &Registry) -> Result<ExitCode> {
    let mut config = common.single()?;
    config.record_wall_clock |= wall_clock;
    let outcome = experiment::run_experiment(&config, registry, Some(&common.out))?;
    let dir = common.out.join(&outcome.name);
    for s in &outcome.seeds {
        match (&s.failure, s.final_return()) {
            (Some(f), _) => eprintln!("seed {}: FAILED: {f}", s.seed),
            (None, Some(r)) => println!("seed {}: final mean return {r:.4}", s.seed),
            (None, None) => {}
        }
    }
    println!("params: {}", outcome.params);
    println!("wrote {}", dir.display());
    Ok(if outcome.failed().is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn compare(common: &Common, registry: &Registry) -> Result<ExitCode> {
    let configs = common.load()?;
    let rows = experiment::compare(&configs, registry, Some(&common.out))?;
    print!("{}", experiment::write_comparison(&rows));
    println!("wrote {}", common.out.join("comparison.csv").display());
    Ok(if rows.iter().all(|r| r.failed_seeds == 0) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn solve(common: &Common, registry: &Registry) -> Result<ExitCode> {
    let config = common.single()?;
    let dir = common.out.join(format!("{}-oracle", config.environment.id));
    let report = experiment::solve(&config.environment, registry, Some(&dir))?;
    println!("v_start = {:.4}", report.solution.v_start);
    println!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn params(common: &Common, registry: &Registry) -> Result<ExitCode> {
    for config in common.load()? {
        let r = param_report(&config, registry)?;
        println!(
            "{} {}: {} params (dense finite-horizon table: {}, ratio {:.4}%)",
            r.environment,
            r.agent,
            r.params,
            r.dense_fh_table,
            100.0 * r.params as f64 / r.dense_fh_table as f64
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let registry = Registry::builtin();
    match &cli.command {
        Command::Train { common, wall_clock } => train(common, *wall_clock, &registry),
        Command::Compare { common } => compare(common, &registry),
        Command::Solve { common } => solve(common, &registry),
        Command::Params { common } => params(common, &registry),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
