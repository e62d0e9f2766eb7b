use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::EpsilonSchedule;
use crate::registry::Registry;

pub const SCHEMA_VERSION: u32 = 1;

/// A registry id plus the parameters its factory understands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub id: String,
    #[serde(default)]
    pub params: toml::Table,
}

/// Everything that determines a run. Identical config and seed give
/// identical outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    /// Training episodes per seed.
    pub episodes: u64,
    /// Evaluate after every this many training episodes (and at the end).
    pub eval_every: u64,
    /// Greedy episodes averaged per evaluation.
    pub eval_episodes: u64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub exploration: EpsilonSchedule,
    pub environment: Component,
    pub agent: Component,
    /// Write measured wall-clock into `elapsed_ms`; otherwise 0 so that
    /// reruns are byte-identical.
    #[serde(default)]
    pub record_wall_clock: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    /// Loads a config file; `name` defaults to the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if config.name.is_none() {
            config.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(config)
    }

    pub fn name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}-{}", self.environment.id, self.agent.id))
    }

    /// Checks scalar fields and that both components can be built.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        self.exploration.validate()?;
        let env = registry.make_environment(&self.environment.id, &self.environment.params)?;
        registry.make_agent(
            &self.agent.id,
            &self.agent.params,
            env.space(),
            self.seeds[0],
        )?;
        Ok(())
    }
}
