//! Finite-horizon MDP contract: spaces, mixed-radix indexing, transitions,
//! the environment and agent traits, and episode rollout.

use std::ops::Deref;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::solver::ExplicitDynamics;

/// Per-dimension coordinates, 0-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(coords: Vec<usize>) -> Self {
        MultiIndex(coords)
    }
}

impl Deref for MultiIndex {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

/// Mixed-radix flat index with the first dimension varying slowest.
pub fn flatten(dims: &[usize], idx: &[usize]) -> Result<usize> {
    if dims.len() != idx.len() {
        return Err(Error::Arity {
            expected: dims.len(),
            got: idx.len(),
        });
    }
    let mut flat = 0usize;
    for (dim, (&size, &i)) in dims.iter().zip(idx).enumerate() {
        if i >= size {
            return Err(Error::Index {
                dim,
                index: i,
                size,
            });
        }
        flat = flat * size + i;
    }
    Ok(flat)
}

/// Inverse of [`flatten`].
pub fn unflatten(dims: &[usize], mut flat: usize) -> Result<MultiIndex> {
    let total = checked_product(dims).ok_or_else(|| Error::invalid("dims", "product overflows"))?;
    if flat >= total {
        return Err(Error::Index {
            dim: 0,
            index: flat,
            size: total,
        });
    }
    let mut coords = vec![0; dims.len()];
    for (c, &size) in coords.iter_mut().zip(dims).rev() {
        *c = flat % size;
        flat /= size;
    }
    Ok(MultiIndex(coords))
}

pub(crate) fn checked_product(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

/// State and action dimensions of a finite-horizon MDP plus its horizon `T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateActionSpace {
    state_dims: Vec<usize>,
    action_dims: Vec<usize>,
    horizon: usize,
    n_states: usize,
    n_actions: usize,
}

impl StateActionSpace {
    pub fn new(state_dims: Vec<usize>, action_dims: Vec<usize>, horizon: usize) -> Result<Self> {
        if state_dims.is_empty() || action_dims.is_empty() {
            return Err(Error::invalid(
                "space",
                "state and action spaces need at least one dimension",
            ));
        }
        if state_dims.iter().chain(&action_dims).any(|&d| d == 0) {
            return Err(Error::invalid("space", "every cardinality must be >= 1"));
        }
        if horizon == 0 {
            return Err(Error::invalid("space", "horizon must be >= 1"));
        }
        let n_states = checked_product(&state_dims)
            .ok_or_else(|| Error::invalid("space", "state cardinality overflows"))?;
        let n_actions = checked_product(&action_dims)
            .ok_or_else(|| Error::invalid("space", "action cardinality overflows"))?;
        n_states
            .checked_mul(n_actions)
            .and_then(|n| n.checked_mul(horizon))
            .ok_or_else(|| Error::invalid("space", "joint cardinality overflows"))?;
        Ok(StateActionSpace {
            state_dims,
            action_dims,
            horizon,
            n_states,
            n_actions,
        })
    }

    pub fn state_dims(&self) -> &[usize] {
        &self.state_dims
    }

    pub fn action_dims(&self) -> &[usize] {
        &self.action_dims
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// |S|
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// |A|
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// |D| = |S|·|A|
    pub fn joint_cardinality(&self) -> usize {
        self.n_states * self.n_actions
    }

    /// D = D_S + D_A
    pub fn n_dims(&self) -> usize {
        self.state_dims.len() + self.action_dims.len()
    }

    /// Dimensions of the value tensor: states, then actions, then time.
    pub fn tensor_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.n_dims() + 1);
        dims.extend_from_slice(&self.state_dims);
        dims.extend_from_slice(&self.action_dims);
        dims.push(self.horizon);
        dims
    }

    /// Entries of a dense finite-horizon table, T·|S|·|A|.
    pub fn dense_fh_size(&self) -> usize {
        self.horizon * self.joint_cardinality()
    }

    pub fn flat_state(&self, s: &[usize]) -> Result<usize> {
        flatten(&self.state_dims, s)
    }

    pub fn flat_action(&self, a: &[usize]) -> Result<usize> {
        flatten(&self.action_dims, a)
    }

    pub fn state_index(&self, flat: usize) -> Result<MultiIndex> {
        unflatten(&self.state_dims, flat)
    }

    pub fn action_index(&self, flat: usize) -> Result<MultiIndex> {
        unflatten(&self.action_dims, flat)
    }

    /// Maps an external time step `1..=T` to its 0-based slot. This is the
    /// only place that conversion happens.
    pub fn time_slot(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.horizon {
            return Err(Error::Time {
                t,
                horizon: self.horizon,
            });
        }
        Ok(t - 1)
    }

    /// Tensor coordinates `[s; a; t]` with the time coordinate 0-based.
    pub fn tensor_index(&self, t: usize, s: &[usize], a: &[usize]) -> Result<Vec<usize>> {
        flatten(&self.state_dims, s)?;
        flatten(&self.action_dims, a)?;
        let slot = self.time_slot(t)?;
        let mut idx = Vec::with_capacity(self.n_dims() + 1);
        idx.extend_from_slice(s);
        idx.extend_from_slice(a);
        idx.push(slot);
        Ok(idx)
    }
}

/// One sampled interaction `(t, s, a, s', r)`. `t` is 1-based and
/// `terminal` holds exactly when `t == T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub t: usize,
    pub state: MultiIndex,
    pub action: MultiIndex,
    pub next_state: MultiIndex,
    pub reward: f64,
    pub terminal: bool,
}

impl Transition {
    pub fn validate(&self, space: &StateActionSpace) -> Result<()> {
        space.time_slot(self.t)?;
        if self.terminal != (self.t == space.horizon()) {
            return Err(Error::invalid(
                "transition",
                format!(
                    "terminal flag {} inconsistent with t = {} and T = {}",
                    self.terminal,
                    self.t,
                    space.horizon()
                ),
            ));
        }
        space.flat_state(&self.state)?;
        space.flat_action(&self.action)?;
        if !self.terminal {
            space.flat_state(&self.next_state)?;
        }
        if !self.reward.is_finite() {
            return Err(Error::invalid("transition", "reward is not finite"));
        }
        Ok(())
    }
}

/// Linear per-episode decay of the exploration probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonSchedule {
    pub eps_start: f64,
    pub eps_end: f64,
    pub decay_episodes: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            eps_start: 1.0,
            eps_end: 0.05,
            decay_episodes: 1000,
        }
    }
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Self {
        EpsilonSchedule {
            eps_start: eps,
            eps_end: eps,
            decay_episodes: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(self.eps_start) || !in_unit(self.eps_end) {
            return Err(Error::invalid(
                "epsilon schedule",
                "probabilities must lie in [0, 1]",
            ));
        }
        if self.eps_end > self.eps_start {
            return Err(Error::invalid(
                "epsilon schedule",
                "eps_end must not exceed eps_start",
            ));
        }
        if self.decay_episodes == 0 {
            return Err(Error::invalid(
                "epsilon schedule",
                "decay_episodes must be positive",
            ));
        }
        Ok(())
    }

    pub fn epsilon(&self, episode: u64) -> f64 {
        let frac = (episode as f64 / self.decay_episodes as f64).min(1.0);
        let eps = self.eps_start * (1.0 - frac) + self.eps_end * frac;
        eps.clamp(self.eps_end, self.eps_start)
    }
}

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub next_state: MultiIndex,
    pub reward: f64,
    pub terminal: bool,
}

/// A finite-horizon environment. Instances carry per-episode state and are
/// never shared between concurrent runs.
pub trait Environment: Send {
    fn name(&self) -> &str;

    fn space(&self) -> &StateActionSpace;

    /// Samples an initial state and makes it current.
    fn reset(&mut self, rng: &mut Rng) -> MultiIndex;

    /// Applies `action` at 1-based time `t` from the current state.
    fn step(&mut self, t: usize, action: &MultiIndex, rng: &mut Rng) -> Result<Step>;

    /// Explicit `P`, `R` and initial distribution, for environments that can
    /// expose them. Model-free learners never call this.
    fn explicit_dynamics(&self) -> Option<ExplicitDynamics> {
        None
    }
}

/// A learner with a greedy policy over a finite-horizon value estimate.
pub trait Agent: Send {
    fn name(&self) -> &'static str;

    fn space(&self) -> &StateActionSpace;

    /// Argmax over the joint action space; ties go to the lowest flat index.
    fn greedy_action(&self, t: usize, state: &[usize]) -> Result<MultiIndex>;

    /// Estimated value of `(s, a)` at 1-based time `t`.
    fn q_value(&self, t: usize, state: &[usize], action: &[usize]) -> Result<f64>;

    fn update(&mut self, tr: &Transition) -> Result<()>;

    /// Number of learned reals.
    fn param_count(&self) -> usize;
}

/// Transitions of one episode and its undiscounted return.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub ret: f64,
}

enum Learner<'a> {
    Frozen(&'a dyn Agent),
    Learning(&'a mut dyn Agent),
}

impl Learner<'_> {
    fn agent(&self) -> &dyn Agent {
        match self {
            Learner::Frozen(a) => *a,
            Learner::Learning(a) => &**a,
        }
    }
}

/// Runs exactly `T` steps with an ε-greedy behaviour policy. The agent is
/// not modified.
pub fn run_episode(
    env: &mut dyn Environment,
    agent: &dyn Agent,
    epsilon: f64,
    seed: u64,
) -> Result<Episode> {
    rollout(env, Learner::Frozen(agent), epsilon, seed)
}

/// Like [`run_episode`], but feeds every transition to `agent.update` as
/// soon as it is observed.
pub fn train_episode(
    env: &mut dyn Environment,
    agent: &mut dyn Agent,
    epsilon: f64,
    seed: u64,
) -> Result<Episode> {
    rollout(env, Learner::Learning(agent), epsilon, seed)
}

fn rollout(
    env: &mut dyn Environment,
    mut learner: Learner<'_>,
    epsilon: f64,
    seed: u64,
) -> Result<Episode> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} not in [0, 1]"),
        ));
    }
    let space = env.space().clone();
    if learner.agent().space() != &space {
        return Err(Error::Contract(format!(
            "agent `{}` was built for a different space than environment `{}`",
            learner.agent().name(),
            env.name()
        )));
    }
    let mut env_rng = rng::stream(seed, rng::ENV_STREAM);
    let mut explore_rng = rng::stream(seed, rng::EXPLORE_STREAM);

    let mut state = env.reset(&mut env_rng);
    let horizon = space.horizon();
    let mut transitions = Vec::with_capacity(horizon);
    let mut ret = 0.0;
    for t in 1..=horizon {
        let explore = epsilon > 0.0 && explore_rng.random::<f64>() < epsilon;
        let action = if explore {
            space.action_index(explore_rng.random_range(0..space.n_actions()))?
        } else {
            let a = learner.agent().greedy_action(t, &state)?;
            space.flat_action(&a).map_err(|e| {
                Error::Contract(format!(
                    "agent `{}` chose {:?} at t = {t}: {e}",
                    learner.agent().name(),
                    a.0
                ))
            })?;
            a
        };
        let step = env.step(t, &action, &mut env_rng)?;
        let tr = Transition {
            t,
            state: std::mem::replace(&mut state, step.next_state.clone()),
            action,
            next_state: step.next_state,
            reward: step.reward,
            terminal: step.terminal,
        };
        if let Learner::Learning(agent) = &mut learner {
            agent.update(&tr)?;
        }
        ret += tr.reward;
        transitions.push(tr);
    }
    Ok(Episode { transitions, ret })
}
