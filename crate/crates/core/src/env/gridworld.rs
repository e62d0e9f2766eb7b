//! Finite-horizon grid world with two rewarding corners.
//!
//! States are cells `(row, col)`; actions are up, down, left, right. Moves
//! off the grid leave the agent in place. Entering a goal cell pays its
//! reward once; goal cells are absorbing and pay nothing afterwards. Every
//! episode runs the full horizon.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Environment, MultiIndex, StateActionSpace, Step};
use crate::rng::Rng;
use crate::solver::ExplicitDynamics;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goal {
    pub row: usize,
    pub col: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridWorldConfig {
    pub width: usize,
    pub height: usize,
    pub horizon: usize,
    pub goals: Vec<Goal>,
    /// Whether episodes may start on a goal cell. Starting there earns
    /// nothing, since goals are absorbing.
    pub start_on_goals: bool,
}

impl Default for GridWorldConfig {
    fn default() -> Self {
        GridWorldConfig {
            width: 5,
            height: 5,
            horizon: 5,
            goals: vec![
                Goal {
                    row: 0,
                    col: 0,
                    reward: 50.0,
                },
                Goal {
                    row: 4,
                    col: 4,
                    reward: 100.0,
                },
            ],
            start_on_goals: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridWorld {
    config: GridWorldConfig,
    space: StateActionSpace,
    /// Goal reward per flat cell.
    goal_at: Vec<Option<f64>>,
    starts: Vec<usize>,
    cell: usize,
}

impl GridWorld {
    pub fn new(config: GridWorldConfig) -> Result<Self> {
        let space =
            StateActionSpace::new(vec![config.height, config.width], vec![4], config.horizon)?;
        let mut goal_at = vec![None; config.height * config.width];
        for g in &config.goals {
            if g.row >= config.height || g.col >= config.width {
                return Err(Error::invalid(
                    "grid world",
                    format!("goal ({}, {}) is off the grid", g.row, g.col),
                ));
            }
            if !g.reward.is_finite() {
                return Err(Error::invalid("grid world", "goal rewards must be finite"));
            }
            let cell = g.row * config.width + g.col;
            if goal_at[cell].replace(g.reward).is_some() {
                return Err(Error::invalid(
                    "grid world",
                    format!("two goals on cell ({}, {})", g.row, g.col),
                ));
            }
        }
        let starts: Vec<usize> = (0..goal_at.len())
            .filter(|&c| config.start_on_goals || goal_at[c].is_none())
            .collect();
        if starts.is_empty() {
            return Err(Error::invalid("grid world", "no admissible start cell"));
        }
        Ok(GridWorld {
            config,
            space,
            goal_at,
            starts,
            cell: 0,
        })
    }

    pub fn config(&self) -> &GridWorldConfig {
        &self.config
    }

    /// Deterministic move from `(row, col)`: next cell and reward.
    pub fn move_from(
        &self,
        row: usize,
        col: usize,
        action: usize,
    ) -> Result<((usize, usize), f64)> {
        let cell = self.space.flat_state(&[row, col])?;
        if action >= 4 {
            return Err(Error::Index {
                dim: 0,
                index: action,
                size: 4,
            });
        }
        if self.goal_at[cell].is_some() {
            return Ok(((row, col), 0.0));
        }
        let (h, w) = (self.config.height, self.config.width);
        let (r, c) = match action {
            UP => (row.saturating_sub(1), col),
            DOWN => ((row + 1).min(h - 1), col),
            LEFT => (row, col.saturating_sub(1)),
            _ => (row, (col + 1).min(w - 1)),
        };
        let entered = (r, c) != (row, col);
        let reward = if entered {
            self.goal_at[r * w + c].unwrap_or(0.0)
        } else {
            0.0
        };
        Ok(((r, c), reward))
    }

    /// Uniform over admissible start cells.
    pub fn initial_distribution(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.goal_at.len()];
        let mass = 1.0 / self.starts.len() as f64;
        for &c in &self.starts {
            p[c] = mass;
        }
        p
    }

    pub fn dynamics(&self) -> ExplicitDynamics {
        let w = self.config.width;
        let n = self.goal_at.len();
        let mut next = Vec::with_capacity(n * 4);
        let mut reward = Vec::with_capacity(n * 4);
        for cell in 0..n {
            for a in 0..4 {
                let ((r, c), rew) = self.move_from(cell / w, cell % w, a).expect("in range");
                next.push(r * w + c);
                reward.push(rew);
            }
        }
        ExplicitDynamics::deterministic(n, 4, &next, reward, self.initial_distribution())
            .expect("grid dynamics are valid")
    }
}

impl Environment for GridWorld {
    fn name(&self) -> &str {
        "gridworld"
    }

    fn space(&self) -> &StateActionSpace {
        &self.space
    }

    fn reset(&mut self, rng: &mut Rng) -> MultiIndex {
        self.cell = self.starts[rng.random_range(0..self.starts.len())];
        let w = self.config.width;
        MultiIndex(vec![self.cell / w, self.cell % w])
    }

    fn step(&mut self, t: usize, action: &MultiIndex, _rng: &mut Rng) -> Result<Step> {
        self.space.time_slot(t)?;
        let a = self.space.flat_action(action)?;
        let w = self.config.width;
        let ((r, c), reward) = self.move_from(self.cell / w, self.cell % w, a)?;
        self.cell = r * w + c;
        Ok(Step {
            next_state: MultiIndex(vec![r, c]),
            reward,
            terminal: t == self.space.horizon(),
        })
    }

    fn explicit_dynamics(&self) -> Option<ExplicitDynamics> {
        Some(self.dynamics())
    }
}
