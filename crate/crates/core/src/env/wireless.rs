//! Time-limited opportunistic multiple access over `C` orthogonal channels.
//!
//! State coordinates, in order: fading level per channel, occupancy per
//! channel (0 free, 1 busy), battery level, queue length. Action
//! coordinates: transmit power level per channel.
//!
//! One step, in this order:
//! 1. the requested powers are truncated so their energy fits the battery,
//!    channels taken in index order;
//! 2. channel `c` carries `⌊log2(1 + g_c p_c / N)⌋` packets; on a busy channel
//!    each packet is lost independently with probability `loss_if_busy`;
//! 3. delivered packets leave the queue, then at most one packet arrives;
//! 4. the battery pays the energy, then harvests at most one unit;
//! 5. fading and occupancy advance along their Markov chains.
//!
//! The reward is zero before the horizon and
//! `w_battery·battery + w_queue·queue` on the final step.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Environment, MultiIndex, StateActionSpace, Step};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WirelessConfig {
    pub channels: usize,
    pub horizon: usize,
    /// SNR gain of each fading level, shared by all channels.
    pub fading_gains: Vec<f64>,
    /// Probability a channel keeps its fading level; otherwise it moves to
    /// one of the other levels uniformly.
    pub fading_stay: f64,
    pub stay_free: f64,
    pub stay_busy: f64,
    pub battery_levels: usize,
    pub harvest_prob: f64,
    pub queue_capacity: usize,
    pub arrival_prob: f64,
    /// Transmit power of each level; level 0 must be silence.
    pub power_levels: Vec<f64>,
    /// Battery units consumed by each power level.
    pub energy_costs: Vec<usize>,
    pub loss_if_busy: f64,
    pub w_battery: f64,
    pub w_queue: f64,
    pub noise_power: f64,
}

impl Default for WirelessConfig {
    fn default() -> Self {
        WirelessConfig {
            channels: 2,
            horizon: 5,
            fading_gains: vec![1.0, 3.0],
            fading_stay: 0.7,
            stay_free: 0.8,
            stay_busy: 0.6,
            battery_levels: 4,
            harvest_prob: 0.5,
            queue_capacity: 5,
            arrival_prob: 0.6,
            power_levels: vec![0.0, 1.0, 2.0],
            energy_costs: vec![0, 1, 2],
            loss_if_busy: 0.5,
            w_battery: 1.0,
            w_queue: -2.0,
            noise_power: 1.0,
        }
    }
}

impl WirelessConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::invalid("wireless config", reason));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.channels == 0 || self.horizon == 0 {
            return bad("channels and horizon must be positive");
        }
        if self.fading_gains.is_empty()
            || self
                .fading_gains
                .iter()
                .any(|g| !(*g > 0.0) || !g.is_finite())
        {
            return bad("fading gains must be positive and finite");
        }
        if ![
            self.fading_stay,
            self.stay_free,
            self.stay_busy,
            self.harvest_prob,
            self.arrival_prob,
            self.loss_if_busy,
        ]
        .into_iter()
        .all(prob)
        {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.battery_levels == 0 {
            return bad("battery_levels must be positive");
        }
        if self.power_levels.is_empty() || self.power_levels.len() != self.energy_costs.len() {
            return bad("power_levels and energy_costs must be non-empty and of equal length");
        }
        if self.power_levels[0] != 0.0 || self.energy_costs[0] != 0 {
            return bad("power level 0 must be silence with zero energy cost");
        }
        if self
            .power_levels
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
            || self.energy_costs.windows(2).any(|w| w[1] < w[0])
        {
            return bad("power levels must increase and energy costs must not decrease");
        }
        if !(self.w_battery > 0.0) || !(self.w_queue < 0.0) {
            return bad("need w_battery > 0 and w_queue < 0");
        }
        if !(self.noise_power > 0.0) || !self.noise_power.is_finite() {
            return bad("noise_power must be positive");
        }
        Ok(())
    }

    pub fn state_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.fading_gains.len(); self.channels];
        dims.extend(std::iter::repeat_n(2, self.channels));
        dims.push(self.battery_levels);
        dims.push(self.queue_capacity + 1);
        dims
    }

    pub fn action_dims(&self) -> Vec<usize> {
        vec![self.power_levels.len(); self.channels]
    }

    /// Long-run probability that a channel is free.
    pub fn stationary_free(&self) -> f64 {
        let leave_free = 1.0 - self.stay_free;
        let leave_busy = 1.0 - self.stay_busy;
        if leave_free + leave_busy == 0.0 {
            return 1.0;
        }
        leave_busy / (leave_free + leave_busy)
    }
}

/// Shannon rate in bits per channel use.
pub fn shannon_rate(gain: f64, power: f64, noise_power: f64) -> f64 {
    (1.0 + gain * power / noise_power).log2()
}

/// Whole packets a channel carries at the given rate.
pub fn packets(rate: f64) -> usize {
    // Absorb rounding so that e.g. log2(4) counts as 2.
    (rate + 1e-9).floor().max(0.0) as usize
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WirelessState {
    pub fading: Vec<usize>,
    pub busy: Vec<bool>,
    pub battery: usize,
    pub queue: usize,
}

impl WirelessState {
    pub fn to_index(&self) -> MultiIndex {
        let mut c = self.fading.clone();
        c.extend(self.busy.iter().map(|&b| b as usize));
        c.push(self.battery);
        c.push(self.queue);
        MultiIndex(c)
    }

    pub fn from_index(channels: usize, idx: &[usize]) -> Self {
        WirelessState {
            fading: idx[..channels].to_vec(),
            busy: idx[channels..2 * channels]
                .iter()
                .map(|&o| o == 1)
                .collect(),
            battery: idx[2 * channels],
            queue: idx[2 * channels + 1],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Wireless {
    config: WirelessConfig,
    space: StateActionSpace,
    state: WirelessState,
}

impl Wireless {
    pub fn new(config: WirelessConfig) -> Result<Self> {
        config.validate()?;
        let space =
            StateActionSpace::new(config.state_dims(), config.action_dims(), config.horizon)?;
        let state = WirelessState {
            fading: vec![0; config.channels],
            busy: vec![false; config.channels],
            battery: 0,
            queue: 0,
        };
        Ok(Wireless {
            config,
            space,
            state,
        })
    }

    pub fn config(&self) -> &WirelessConfig {
        &self.config
    }

    /// Powers actually used given the battery: each channel in order gets
    /// the highest level not above its request that the remaining energy
    /// pays for.
    pub fn feasible_action(&self, battery: usize, action: &[usize]) -> Vec<usize> {
        let mut remaining = battery;
        action
            .iter()
            .map(|&req| {
                let level = (0..=req)
                    .rev()
                    .find(|&l| self.config.energy_costs[l] <= remaining)
                    .unwrap_or(0);
                remaining -= self.config.energy_costs[level];
                level
            })
            .collect()
    }

    pub fn terminal_reward(&self, battery: usize, queue: usize) -> f64 {
        self.config.w_battery * battery as f64 + self.config.w_queue * queue as f64
    }

    /// One step of the system from `state`. Randomness is drawn in a fixed
    /// order from `rng`.
    pub fn advance(
        &self,
        state: &WirelessState,
        action: &[usize],
        t: usize,
        rng: &mut Rng,
    ) -> Result<(WirelessState, f64)> {
        self.space.time_slot(t)?;
        self.space.flat_state(&state.to_index())?;
        self.space.flat_action(action)?;
        let cfg = &self.config;

        let powers = self.feasible_action(state.battery, action);
        let spent: usize = powers.iter().map(|&l| cfg.energy_costs[l]).sum();

        let mut carried = 0usize;
        for c in 0..cfg.channels {
            let gain = cfg.fading_gains[state.fading[c]];
            let n = packets(shannon_rate(
                gain,
                cfg.power_levels[powers[c]],
                cfg.noise_power,
            ));
            carried += if state.busy[c] {
                (0..n)
                    .filter(|_| !rng.random_bool(cfg.loss_if_busy))
                    .count()
            } else {
                n
            };
        }
        let mut queue = state.queue - carried.min(state.queue);
        if rng.random_bool(cfg.arrival_prob) {
            queue = (queue + 1).min(cfg.queue_capacity);
        }

        let mut battery = state.battery - spent;
        if rng.random_bool(cfg.harvest_prob) {
            battery = (battery + 1).min(cfg.battery_levels - 1);
        }

        let levels = cfg.fading_gains.len();
        let fading = state
            .fading
            .iter()
            .map(|&f| {
                if levels == 1 || rng.random_bool(cfg.fading_stay) {
                    f
                } else {
                    let other = rng.random_range(0..levels - 1);
                    if other >= f {
                        other + 1
                    } else {
                        other
                    }
                }
            })
            .collect();
        let busy = state
            .busy
            .iter()
            .map(|&b| {
                if b {
                    rng.random_bool(cfg.stay_busy)
                } else {
                    !rng.random_bool(cfg.stay_free)
                }
            })
            .collect();

        let reward = if t == cfg.horizon {
            self.terminal_reward(battery, queue)
        } else {
            0.0
        };
        Ok((
            WirelessState {
                fading,
                busy,
                battery,
                queue,
            },
            reward,
        ))
    }

    /// Fading and occupancy from their stationary laws; battery and queue
    /// uniform.
    pub fn sample_initial(&self, rng: &mut Rng) -> WirelessState {
        let cfg = &self.config;
        let p_free = cfg.stationary_free();
        WirelessState {
            fading: (0..cfg.channels)
                .map(|_| rng.random_range(0..cfg.fading_gains.len()))
                .collect(),
            busy: (0..cfg.channels)
                .map(|_| !rng.random_bool(p_free))
                .collect(),
            battery: rng.random_range(0..cfg.battery_levels),
            queue: rng.random_range(0..=cfg.queue_capacity),
        }
    }
}

impl Environment for Wireless {
    fn name(&self) -> &str {
        "wireless"
    }

    fn space(&self) -> &StateActionSpace {
        &self.space
    }

    fn reset(&mut self, rng: &mut Rng) -> MultiIndex {
        self.state = self.sample_initial(rng);
        self.state.to_index()
    }

    fn step(&mut self, t: usize, action: &MultiIndex, rng: &mut Rng) -> Result<Step> {
        let (next, reward) = self.advance(&self.state, action, t, rng)?;
        self.state = next;
        Ok(Step {
            next_state: self.state.to_index(),
            reward,
            terminal: t == self.space.horizon(),
        })
    }
}
