//! Two states, two actions, `R(s, a) = s + a`; action 0 stays, action 1
//! flips. Small enough to solve by hand, used as a learning fixture.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mdp::{Environment, MultiIndex, StateActionSpace, Step};
use crate::rng::Rng;
use crate::solver::ExplicitDynamics;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoStateConfig {
    pub horizon: usize,
}

impl Default for TwoStateConfig {
    fn default() -> Self {
        TwoStateConfig { horizon: 2 }
    }
}

#[derive(Clone, Debug)]
pub struct TwoState {
    space: StateActionSpace,
    state: usize,
}

impl TwoState {
    pub fn new(config: TwoStateConfig) -> Result<Self> {
        Ok(TwoState {
            space: StateActionSpace::new(vec![2], vec![2], config.horizon)?,
            state: 0,
        })
    }

    pub fn dynamics() -> ExplicitDynamics {
        ExplicitDynamics::deterministic(
            2,
            2,
            &[0, 1, 1, 0],
            vec![0.0, 1.0, 1.0, 2.0],
            vec![0.5, 0.5],
        )
        .expect("fixture dynamics are valid")
    }
}

impl Environment for TwoState {
    fn name(&self) -> &str {
        "two-state"
    }

    fn space(&self) -> &StateActionSpace {
        &self.space
    }

    fn reset(&mut self, rng: &mut Rng) -> MultiIndex {
        self.state = rng.random_range(0..2);
        MultiIndex(vec![self.state])
    }

    fn step(&mut self, t: usize, action: &MultiIndex, _rng: &mut Rng) -> Result<Step> {
        self.space.time_slot(t)?;
        let a = self.space.flat_action(action)?;
        let reward = (self.state + a) as f64;
        self.state = if a == 1 { 1 - self.state } else { self.state };
        Ok(Step {
            next_state: MultiIndex(vec![self.state]),
            reward,
            terminal: t == self.space.horizon(),
        })
    }

    fn explicit_dynamics(&self) -> Option<ExplicitDynamics> {
        Some(Self::dynamics())
    }
}
