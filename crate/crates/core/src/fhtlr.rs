//! FHTLR-learning: online block-coordinate updates of a PARAFAC model of the
//! time-indexed Q-tensor `[s; a; t]`.
//!
//! Each transition yields one target (computed before anything changes) and
//! then one row update per mode. For mode `d` the row `F_d[i_d, :]` moves by
//! `α (q̂ − Q̂[i]) g_d`, where `g_d[k] = Π_{j≠d} F_j[i_j, k]`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Agent, MultiIndex, StateActionSpace, Transition};
use crate::parafac::ParafacModel;
use crate::rng::Rng;
use crate::tabular::StepSizeSchedule;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// Every mode reads the same pre-update snapshot.
    #[default]
    Jacobi,
    /// Modes are updated in order, each reading the freshest rows.
    GaussSeidel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FhtlrConfig {
    pub rank: usize,
    /// Factor entries start i.i.d. `N(init_mean, init_scale²)`.
    pub init_mean: f64,
    pub init_scale: f64,
    pub step: StepSizeSchedule,
    pub update_mode: UpdateMode,
    /// Abort once any updated entry exceeds this magnitude.
    pub divergence_bound: f64,
}

impl Default for FhtlrConfig {
    fn default() -> Self {
        FhtlrConfig {
            rank: 8,
            init_mean: 0.0,
            init_scale: 0.1,
            step: StepSizeSchedule::constant(0.005),
            update_mode: UpdateMode::Jacobi,
            divergence_bound: 1e6,
        }
    }
}

impl FhtlrConfig {
    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        if !self.init_mean.is_finite() {
            return Err(Error::invalid("init_mean", format!("{}", self.init_mean)));
        }
        if !(self.init_scale >= 0.0) || !self.init_scale.is_finite() {
            return Err(Error::invalid("init_scale", format!("{}", self.init_scale)));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::invalid(
                "divergence_bound",
                format!("{}", self.divergence_bound),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetEstimate {
    pub q_hat: f64,
    /// False exactly for terminal transitions.
    pub bootstrap: bool,
}

#[derive(Clone, Debug)]
pub struct FhtlrAgent {
    space: StateActionSpace,
    model: ParafacModel,
    config: FhtlrConfig,
    visits: HashMap<usize, u64>,
    transitions_seen: u64,
}

impl FhtlrAgent {
    pub fn new(space: StateActionSpace, config: FhtlrConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let model = ParafacModel::random_normal(
            &space.tensor_dims(),
            config.rank,
            config.init_mean,
            config.init_scale,
            rng,
        )?;
        Self::with_model(space, model, config)
    }

    pub fn with_model(
        space: StateActionSpace,
        model: ParafacModel,
        config: FhtlrConfig,
    ) -> Result<Self> {
        config.validate()?;
        if model.dims() != space.tensor_dims().as_slice() {
            return Err(Error::Shape(format!(
                "model dims {:?} do not match space {:?}",
                model.dims(),
                space.tensor_dims()
            )));
        }
        if model.rank() != config.rank {
            return Err(Error::Shape(format!(
                "model rank {} but config rank {}",
                model.rank(),
                config.rank
            )));
        }
        Ok(FhtlrAgent {
            space,
            model,
            config,
            visits: HashMap::new(),
            transitions_seen: 0,
        })
    }

    pub fn model(&self) -> &ParafacModel {
        &self.model
    }

    pub fn config(&self) -> &FhtlrConfig {
        &self.config
    }

    /// Per-rank products over the state and time modes at `(s, ·, slot)`,
    /// so that an action's value is `Σ_k base[k] Π_action F[a_j, k]`.
    fn state_time_products(&self, state: &[usize], slot: usize) -> Vec<f64> {
        let n_state = self.space.state_dims().len();
        let time_mode = self.space.n_dims();
        (0..self.config.rank)
            .map(|k| {
                let mut p = self.model.factor(time_mode)[[slot, k]];
                for (d, &i) in state.iter().enumerate().take(n_state) {
                    p *= self.model.factor(d)[[i, k]];
                }
                p
            })
            .collect()
    }

    /// Value of every joint action at `(s, slot)`, flat action order.
    fn action_values(&self, state: &[usize], slot: usize) -> Vec<f64> {
        let base = self.state_time_products(state, slot);
        let n_state = self.space.state_dims().len();
        let action_dims = self.space.action_dims();
        let mut coords = vec![0usize; action_dims.len()];
        let mut out = Vec::with_capacity(self.space.n_actions());
        for _ in 0..self.space.n_actions() {
            let v: f64 = base
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    coords.iter().enumerate().fold(*b, |acc, (j, &c)| {
                        acc * self.model.factor(n_state + j)[[c, k]]
                    })
                })
                .sum();
            out.push(v);
            // Odometer increment, last action dimension fastest.
            for j in (0..coords.len()).rev() {
                coords[j] += 1;
                if coords[j] < action_dims[j] {
                    break;
                }
                coords[j] = 0;
            }
        }
        out
    }

    /// `r` at the horizon, else `r + max_a Q̂[s'; a; t + 1]` from the current
    /// model.
    pub fn compute_target(&self, tr: &Transition) -> Result<TargetEstimate> {
        tr.validate(&self.space)?;
        if tr.terminal {
            return Ok(TargetEstimate {
                q_hat: tr.reward,
                bootstrap: false,
            });
        }
        let next_slot = self.space.time_slot(tr.t)? + 1;
        let best = self
            .action_values(&tr.next_state, next_slot)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(TargetEstimate {
            q_hat: tr.reward + best,
            bootstrap: true,
        })
    }

    /// One block-coordinate step toward `q_hat` at tensor index `idx`,
    /// touching exactly one row per mode.
    pub fn step_toward(&mut self, idx: &[usize], q_hat: f64, alpha: f64) -> Result<()> {
        self.model.eval_entry(idx)?;
        apply_step(&mut self.model, idx, q_hat, alpha, self.config.update_mode);
        Ok(())
    }

    fn check_health(&self, idx: &[usize], q_hat: f64) -> Result<()> {
        let transition = self.transitions_seen;
        let rows_finite = self
            .model
            .factors()
            .iter()
            .zip(idx)
            .all(|(f, &i)| f.row(i).iter().all(|x| x.is_finite()));
        if !rows_finite {
            return Err(Error::Divergence {
                transition,
                detail: format!("non-finite factor row at index {idx:?} (target {q_hat})"),
            });
        }
        let value = self.model.eval_unchecked(idx);
        if !(value.abs() <= self.config.divergence_bound) {
            return Err(Error::Divergence {
                transition,
                detail: format!(
                    "|Q| = {value:e} at {idx:?} exceeds bound {:e}",
                    self.config.divergence_bound
                ),
            });
        }
        Ok(())
    }
}

/// Core update, shared by both modes.
fn apply_step(model: &mut ParafacModel, idx: &[usize], q_hat: f64, alpha: f64, mode: UpdateMode) {
    let rank = model.rank();
    let n_modes = model.n_modes();
    let row = |m: &ParafacModel, d: usize| -> Vec<f64> { m.factor(d).row(idx[d]).to_vec() };

    match mode {
        UpdateMode::Jacobi => {
            let rows: Vec<Vec<f64>> = (0..n_modes).map(|d| row(model, d)).collect();
            let error = q_hat - rank_sum(&rows, rank);
            for d in 0..n_modes {
                let dir = leave_one_out(&rows, rank, d);
                let mut target = model.factor_mut(d).row_mut(idx[d]);
                for k in 0..rank {
                    target[k] = rows[d][k] + alpha * error * dir[k];
                }
            }
        }
        UpdateMode::GaussSeidel => {
            for d in 0..n_modes {
                let rows: Vec<Vec<f64>> = (0..n_modes).map(|j| row(model, j)).collect();
                let error = q_hat - rank_sum(&rows, rank);
                let dir = leave_one_out(&rows, rank, d);
                let mut target = model.factor_mut(d).row_mut(idx[d]);
                for k in 0..rank {
                    target[k] += alpha * error * dir[k];
                }
            }
        }
    }
}

fn rank_sum(rows: &[Vec<f64>], rank: usize) -> f64 {
    (0..rank)
        .map(|k| rows.iter().map(|r| r[k]).product::<f64>())
        .sum()
}

/// `g_d[k] = Π_{j≠d} rows[j][k]`.
fn leave_one_out(rows: &[Vec<f64>], rank: usize, d: usize) -> Vec<f64> {
    (0..rank)
        .map(|k| {
            rows.iter()
                .enumerate()
                .filter(|(j, _)| *j != d)
                .map(|(_, r)| r[k])
                .product()
        })
        .collect()
}

impl Agent for FhtlrAgent {
    fn name(&self) -> &'static str {
        "fhtlr"
    }

    fn space(&self) -> &StateActionSpace {
        &self.space
    }

    fn greedy_action(&self, t: usize, state: &[usize]) -> Result<MultiIndex> {
        let slot = self.space.time_slot(t)?;
        self.space.flat_state(state)?;
        let values = self.action_values(state, slot);
        self.space.action_index(crate::solver::argmax(&values))
    }

    fn q_value(&self, t: usize, state: &[usize], action: &[usize]) -> Result<f64> {
        let idx = self.space.tensor_index(t, state, action)?;
        Ok(self.model.eval_unchecked(&idx))
    }

    fn update(&mut self, tr: &Transition) -> Result<()> {
        self.transitions_seen += 1;
        let target = self.compute_target(tr)?;
        if !target.q_hat.is_finite() {
            return Err(Error::Divergence {
                transition: self.transitions_seen,
                detail: format!("non-finite target {}", target.q_hat),
            });
        }
        let idx = self.space.tensor_index(tr.t, &tr.state, &tr.action)?;
        let alpha = match self.config.step.kind {
            crate::tabular::StepSizeKind::Constant => self.config.step.alpha0,
            crate::tabular::StepSizeKind::InverseVisitCount => {
                let cell = crate::mdp::flatten(self.model.dims(), &idx)?;
                let visits = self.visits.entry(cell).or_insert(0);
                let a = self.config.step.alpha(*visits);
                *visits += 1;
                a
            }
        };
        apply_step(
            &mut self.model,
            &idx,
            target.q_hat,
            alpha,
            self.config.update_mode,
        );
        self.check_health(&idx, target.q_hat)
    }

    fn param_count(&self) -> usize {
        self.model.count_params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::Array2;

    fn space222() -> StateActionSpace {
        StateActionSpace::new(vec![2], vec![2], 2).unwrap()
    }

    fn ones_model(dims: &[usize], rank: usize) -> ParafacModel {
        let mut m = ParafacModel::zeros(dims, rank).unwrap();
        for d in 0..m.n_modes() {
            m.factor_mut(d).fill(1.0);
        }
        m
    }

    fn cfg(rank: usize, alpha: f64, mode: UpdateMode) -> FhtlrConfig {
        FhtlrConfig {
            rank,
            init_mean: 0.0,
            init_scale: 0.0,
            step: StepSizeSchedule::constant(alpha),
            update_mode: mode,
            divergence_bound: 1e6,
        }
    }

    fn tr(t: usize, r: f64) -> Transition {
        Transition {
            t,
            state: vec![0].into(),
            action: vec![1].into(),
            next_state: vec![1].into(),
            reward: r,
            terminal: t == 2,
        }
    }

    #[test]
    fn terminal_target_is_reward() {
        let agent = FhtlrAgent::with_model(
            space222(),
            ones_model(&[2, 2, 2], 1),
            cfg(1, 0.1, UpdateMode::Jacobi),
        )
        .unwrap();
        let t = agent.compute_target(&tr(2, 3.0)).unwrap();
        assert_eq!(
            t,
            TargetEstimate {
                q_hat: 3.0,
                bootstrap: false
            }
        );
    }

    #[test]
    fn zero_model_target_is_reward() {
        let agent = FhtlrAgent::with_model(
            space222(),
            ParafacModel::zeros(&[2, 2, 2], 3).unwrap(),
            cfg(3, 0.1, UpdateMode::Jacobi),
        )
        .unwrap();
        let t = agent.compute_target(&tr(1, 2.0)).unwrap();
        assert_eq!(
            t,
            TargetEstimate {
                q_hat: 2.0,
                bootstrap: true
            }
        );
    }

    #[test]
    fn ones_model_target_adds_one() {
        let agent = FhtlrAgent::with_model(
            space222(),
            ones_model(&[2, 2, 2], 1),
            cfg(1, 0.1, UpdateMode::Jacobi),
        )
        .unwrap();
        assert_eq!(agent.compute_target(&tr(1, 2.0)).unwrap().q_hat, 3.0);
    }

    #[test]
    fn hand_jacobi_step() {
        let mut agent = FhtlrAgent::with_model(
            space222(),
            ones_model(&[2, 2, 2], 1),
            cfg(1, 0.5, UpdateMode::Jacobi),
        )
        .unwrap();
        let idx = [0, 1, 0];
        agent.step_toward(&idx, 2.0, 0.5).unwrap();
        for (d, &i) in idx.iter().enumerate() {
            assert_eq!(agent.model().factor(d)[[i, 0]], 1.5);
            // The other row of each factor is untouched.
            assert_eq!(agent.model().factor(d)[[1 - i, 0]], 1.0);
        }
    }

    #[test]
    fn zero_alpha_and_zero_error_are_fixed_points() {
        let mut r = rng::stream(5, 0);
        let space = StateActionSpace::new(vec![3, 2], vec![2], 3).unwrap();
        let model = ParafacModel::random_uniform(&space.tensor_dims(), 2, &mut r).unwrap();
        let mut agent =
            FhtlrAgent::with_model(space, model.clone(), cfg(2, 0.0, UpdateMode::Jacobi)).unwrap();
        agent.step_toward(&[1, 1, 0, 2], 10.0, 0.0).unwrap();
        assert_eq!(agent.model(), &model);

        let idx = [2, 0, 1, 1];
        let current = model.eval_entry(&idx).unwrap();
        for mode in [UpdateMode::Jacobi, UpdateMode::GaussSeidel] {
            let mut m = model.clone();
            apply_step(&mut m, &idx, current, 0.7, mode);
            assert_eq!(m, model);
        }
    }

    #[test]
    fn gauss_seidel_differs_from_jacobi() {
        let mut a = ones_model(&[2, 2, 2], 1);
        let mut b = a.clone();
        apply_step(&mut a, &[0, 0, 0], 2.0, 0.5, UpdateMode::Jacobi);
        apply_step(&mut b, &[0, 0, 0], 2.0, 0.5, UpdateMode::GaussSeidel);
        // Gauss-Seidel: mode 0 → 1.5; mode 1 sees error 0.5 and direction 1.5.
        assert_eq!(b.factor(0)[[0, 0]], 1.5);
        assert_eq!(b.factor(1)[[0, 0]], 1.375);
        assert_ne!(a, b);
    }

    #[test]
    fn greedy_ties_and_unique_max() {
        let space = StateActionSpace::new(vec![2], vec![4], 2).unwrap();
        let zero = ParafacModel::zeros(&space.tensor_dims(), 2).unwrap();
        let agent =
            FhtlrAgent::with_model(space.clone(), zero, cfg(2, 0.1, UpdateMode::Jacobi)).unwrap();
        assert_eq!(agent.greedy_action(1, &[1]).unwrap().0, vec![0]);

        let mut m = ones_model(&space.tensor_dims(), 1);
        m.factor_mut(1)
            .assign(&Array2::from_shape_vec((4, 1), vec![0.1, 0.3, 0.9, 0.2]).unwrap());
        let agent = FhtlrAgent::with_model(space, m, cfg(1, 0.1, UpdateMode::Jacobi)).unwrap();
        assert_eq!(agent.greedy_action(2, &[0]).unwrap().0, vec![2]);
    }

    #[test]
    fn divergence_guard_trips() {
        let mut c = cfg(1, 1e4, UpdateMode::Jacobi);
        c.divergence_bound = 1e3;
        let mut agent = FhtlrAgent::with_model(space222(), ones_model(&[2, 2, 2], 1), c).unwrap();
        let err = agent.update(&tr(2, 1e3)).unwrap_err();
        assert!(
            matches!(err, Error::Divergence { transition: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn rejects_mismatched_model() {
        let m = ParafacModel::zeros(&[2, 2, 3], 1).unwrap();
        assert!(FhtlrAgent::with_model(space222(), m, cfg(1, 0.1, UpdateMode::Jacobi)).is_err());
        let m = ParafacModel::zeros(&[2, 2, 2], 2).unwrap();
        assert!(FhtlrAgent::with_model(space222(), m, cfg(1, 0.1, UpdateMode::Jacobi)).is_err());
    }

    #[test]
    fn grid_world_param_count() {
        let space = StateActionSpace::new(vec![5, 5], vec![4], 5).unwrap();
        let mut r = rng::stream(0, 0);
        let agent = FhtlrAgent::new(space, FhtlrConfig::default(), &mut r).unwrap();
        assert_eq!(agent.param_count(), 152);
    }
}
