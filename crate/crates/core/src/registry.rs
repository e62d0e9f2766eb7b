//! Name → factory tables for environments and agents.
//!
//! Each factory receives the free-form `params` table of its config section
//! and deserializes its own settings, rejecting unknown keys.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;

use crate::env::{GridWorld, GridWorldConfig, TwoState, TwoStateConfig, Wireless, WirelessConfig};
use crate::error::{Error, Result};
use crate::fhtlr::{FhtlrAgent, FhtlrConfig};
use crate::mdp::{Agent, Environment, StateActionSpace};
use crate::rng;
use crate::tabular::{FhqAgent, StationaryQAgent, StepSizeSchedule};

pub type EnvFactory = fn(&toml::Table) -> Result<Box<dyn Environment>>;
pub type AgentFactory = fn(&toml::Table, &StateActionSpace, u64) -> Result<Box<dyn Agent>>;

pub struct Registry {
    environments: BTreeMap<String, EnvFactory>,
    agents: BTreeMap<String, AgentFactory>,
}

/// Deserializes a params table into `T`, naming `what` in errors.
pub fn parse_params<T: DeserializeOwned>(what: &str, params: &toml::Table) -> Result<T> {
    toml::Value::Table(params.clone())
        .try_into()
        .map_err(|e| Error::Config(format!("{what}: {e}")))
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct TabularParams {
    #[serde(default = "default_tabular_step")]
    step: StepSizeSchedule,
}

fn default_tabular_step() -> StepSizeSchedule {
    StepSizeSchedule::constant(0.1)
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            environments: BTreeMap::new(),
            agents: BTreeMap::new(),
        }
    }

    /// Every environment and agent shipped with the crate.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_environment("gridworld", |p| {
            Ok(Box::new(GridWorld::new(parse_params::<GridWorldConfig>(
                "gridworld",
                p,
            )?)?))
        });
        r.register_environment("wireless", |p| {
            Ok(Box::new(Wireless::new(parse_params::<WirelessConfig>(
                "wireless", p,
            )?)?))
        });
        r.register_environment("two-state", |p| {
            Ok(Box::new(TwoState::new(parse_params::<TwoStateConfig>(
                "two-state",
                p,
            )?)?))
        });
        r.register_agent("q", |p, space, _| {
            let params: TabularParams = parse_params("q", p)?;
            Ok(Box::new(StationaryQAgent::new(space.clone(), params.step)?))
        });
        r.register_agent("fhq", |p, space, _| {
            let params: TabularParams = parse_params("fhq", p)?;
            Ok(Box::new(FhqAgent::new(space.clone(), params.step)?))
        });
        r.register_agent("fhtlr", |p, space, seed| {
            let config: FhtlrConfig = parse_params("fhtlr", p)?;
            let mut init = rng::stream(rng::derive_seed(seed, rng::Purpose::Init, 0), 0);
            Ok(Box::new(FhtlrAgent::new(space.clone(), config, &mut init)?))
        });
        r
    }

    pub fn register_environment(&mut self, id: &str, factory: EnvFactory) {
        self.environments.insert(id.to_string(), factory);
    }

    pub fn register_agent(&mut self, id: &str, factory: AgentFactory) {
        self.agents.insert(id.to_string(), factory);
    }

    pub fn environment_ids(&self) -> impl Iterator<Item = &str> {
        self.environments.keys().map(String::as_str)
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = &str> {
        self.agents.keys().map(String::as_str)
    }

    pub fn make_environment(&self, id: &str, params: &toml::Table) -> Result<Box<dyn Environment>> {
        let factory = self.environments.get(id).ok_or_else(|| {
            Error::Config(format!(
                "unknown environment `{id}` (known: {})",
                self.environment_ids().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(params)
    }

    /// `seed` is the experiment seed; agents derive their own init stream.
    pub fn make_agent(
        &self,
        id: &str,
        params: &toml::Table,
        space: &StateActionSpace,
        seed: u64,
    ) -> Result<Box<dyn Agent>> {
        let factory = self.agents.get(id).ok_or_else(|| {
            Error::Config(format!(
                "unknown agent `{id}` (known: {})",
                self.agent_ids().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(params, space, seed)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}
