//! Dense-table baselines: finite-horizon Q-learning (one table per time
//! step) and ordinary stationary Q-learning run on the same task.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Agent, MultiIndex, StateActionSpace, Transition};
use crate::solver::argmax;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSizeKind {
    Constant,
    /// `alpha0 / (1 + visits)`, counted per updated cell before the update.
    InverseVisitCount,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSizeSchedule {
    pub kind: StepSizeKind,
    pub alpha0: f64,
}

impl StepSizeSchedule {
    pub fn constant(alpha0: f64) -> Self {
        StepSizeSchedule {
            kind: StepSizeKind::Constant,
            alpha0,
        }
    }

    pub fn inverse_visit_count(alpha0: f64) -> Self {
        StepSizeSchedule {
            kind: StepSizeKind::InverseVisitCount,
            alpha0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 >= 0.0) || !self.alpha0.is_finite() {
            return Err(Error::invalid(
                "step size",
                format!("alpha0 = {}", self.alpha0),
            ));
        }
        Ok(())
    }

    pub fn alpha(&self, visits: u64) -> f64 {
        match self.kind {
            StepSizeKind::Constant => self.alpha0,
            StepSizeKind::InverseVisitCount => self.alpha0 / (1.0 + visits as f64),
        }
    }
}

/// Dense `slots × |S| × |A|` table with per-cell visit counts.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    slots: usize,
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    visits: Vec<u64>,
    step: StepSizeSchedule,
}

impl QTable {
    pub fn zeros(slots: usize, n_states: usize, n_actions: usize, step: StepSizeSchedule) -> Self {
        let n = slots * n_states * n_actions;
        QTable {
            slots,
            n_states,
            n_actions,
            values: vec![0.0; n],
            visits: vec![0; n],
            step,
        }
    }

    fn offset(&self, slot: usize, s: usize) -> usize {
        (slot * self.n_states + s) * self.n_actions
    }

    pub fn get(&self, slot: usize, s: usize, a: usize) -> f64 {
        self.values[self.offset(slot, s) + a]
    }

    pub fn set(&mut self, slot: usize, s: usize, a: usize, v: f64) {
        let i = self.offset(slot, s) + a;
        self.values[i] = v;
    }

    pub fn row(&self, slot: usize, s: usize) -> &[f64] {
        let o = self.offset(slot, s);
        &self.values[o..o + self.n_actions]
    }

    pub fn max(&self, slot: usize, s: usize) -> f64 {
        self.row(slot, s)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self, slot: usize, s: usize) -> usize {
        argmax(self.row(slot, s))
    }

    /// Moves one cell toward `target` by the scheduled step size.
    pub fn nudge(&mut self, slot: usize, s: usize, a: usize, target: f64) {
        let i = self.offset(slot, s) + a;
        let alpha = self.step.alpha(self.visits[i]);
        self.values[i] += alpha * (target - self.values[i]);
        self.visits[i] += 1;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// FHQ-learning: `Q_t` per time step, bootstrapping from `Q_{t+1}`.
#[derive(Clone, Debug)]
pub struct FhqAgent {
    space: StateActionSpace,
    table: QTable,
}

impl FhqAgent {
    pub fn new(space: StateActionSpace, step: StepSizeSchedule) -> Result<Self> {
        step.validate()?;
        let table = QTable::zeros(space.horizon(), space.n_states(), space.n_actions(), step);
        Ok(FhqAgent { space, table })
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut QTable {
        &mut self.table
    }
}

impl Agent for FhqAgent {
    fn name(&self) -> &'static str {
        "fhq"
    }

    fn space(&self) -> &StateActionSpace {
        &self.space
    }

    fn greedy_action(&self, t: usize, state: &[usize]) -> Result<MultiIndex> {
        let slot = self.space.time_slot(t)?;
        let s = self.space.flat_state(state)?;
        self.space.action_index(self.table.argmax(slot, s))
    }

    fn q_value(&self, t: usize, state: &[usize], action: &[usize]) -> Result<f64> {
        let slot = self.space.time_slot(t)?;
        Ok(self.table.get(
            slot,
            self.space.flat_state(state)?,
            self.space.flat_action(action)?,
        ))
    }

    fn update(&mut self, tr: &Transition) -> Result<()> {
        tr.validate(&self.space)?;
        let slot = self.space.time_slot(tr.t)?;
        let s = self.space.flat_state(&tr.state)?;
        let a = self.space.flat_action(&tr.action)?;
        let target = if tr.terminal {
            tr.reward
        } else {
            let s_next = self.space.flat_state(&tr.next_state)?;
            tr.reward + self.table.max(slot + 1, s_next)
        };
        self.table.nudge(slot, s, a, target);
        Ok(())
    }

    fn param_count(&self) -> usize {
        self.table.len()
    }
}

/// Undiscounted stationary Q-learning. The horizon is invisible to it
/// except that the bootstrap is cut at the final step.
#[derive(Clone, Debug)]
pub struct StationaryQAgent {
    space: StateActionSpace,
    table: QTable,
}

impl StationaryQAgent {
    pub fn new(space: StateActionSpace, step: StepSizeSchedule) -> Result<Self> {
        step.validate()?;
        let table = QTable::zeros(1, space.n_states(), space.n_actions(), step);
        Ok(StationaryQAgent { space, table })
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut QTable {
        &mut self.table
    }
}

impl Agent for StationaryQAgent {
    fn name(&self) -> &'static str {
        "q"
    }

    fn space(&self) -> &StateActionSpace {
        &self.space
    }

    fn greedy_action(&self, t: usize, state: &[usize]) -> Result<MultiIndex> {
        self.space.time_slot(t)?;
        let s = self.space.flat_state(state)?;
        self.space.action_index(self.table.argmax(0, s))
    }

    fn q_value(&self, t: usize, state: &[usize], action: &[usize]) -> Result<f64> {
        self.space.time_slot(t)?;
        Ok(self.table.get(
            0,
            self.space.flat_state(state)?,
            self.space.flat_action(action)?,
        ))
    }

    fn update(&mut self, tr: &Transition) -> Result<()> {
        tr.validate(&self.space)?;
        let s = self.space.flat_state(&tr.state)?;
        let a = self.space.flat_action(&tr.action)?;
        let target = if tr.terminal {
            tr.reward
        } else {
            tr.reward + self.table.max(0, self.space.flat_state(&tr.next_state)?)
        };
        self.table.nudge(0, s, a, target);
        Ok(())
    }

    fn param_count(&self) -> usize {
        self.table.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> StateActionSpace {
        StateActionSpace::new(vec![2], vec![2], 2).unwrap()
    }

    fn tr(t: usize, s: usize, a: usize, s_next: usize, r: f64) -> Transition {
        Transition {
            t,
            state: vec![s].into(),
            action: vec![a].into(),
            next_state: vec![s_next].into(),
            reward: r,
            terminal: t == 2,
        }
    }

    fn diff_count(a: &[f64], b: &[f64]) -> usize {
        a.iter().zip(b).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn fhq_terminal_alpha_one() {
        let mut agent = FhqAgent::new(space(), StepSizeSchedule::constant(1.0)).unwrap();
        agent.update(&tr(2, 1, 0, 0, 7.0)).unwrap();
        assert_eq!(agent.table().get(1, 1, 0), 7.0);
    }

    #[test]
    fn fhq_bootstraps_from_next_slot() {
        let mut agent = FhqAgent::new(space(), StepSizeSchedule::constant(1.0)).unwrap();
        agent.table_mut().set(1, 1, 1, 4.0);
        agent.table_mut().set(0, 1, 1, 100.0); // same slot; must not be used
        agent.update(&tr(1, 0, 1, 1, 1.0)).unwrap();
        assert_eq!(agent.table().get(0, 0, 1), 5.0);
    }

    #[test]
    fn zero_step_leaves_table() {
        let mut fhq = FhqAgent::new(space(), StepSizeSchedule::constant(0.0)).unwrap();
        fhq.table_mut().set(0, 0, 0, 3.0);
        let before = fhq.table().clone();
        fhq.update(&tr(1, 0, 0, 1, 9.0)).unwrap();
        assert_eq!(fhq.table().values(), before.values());

        let mut q = StationaryQAgent::new(space(), StepSizeSchedule::constant(0.0)).unwrap();
        let before = q.table().clone();
        q.update(&tr(2, 0, 0, 1, 9.0)).unwrap();
        assert_eq!(q.table().values(), before.values());
    }

    #[test]
    fn stationary_terminal_alpha_one() {
        let mut q = StationaryQAgent::new(space(), StepSizeSchedule::constant(1.0)).unwrap();
        q.update(&tr(2, 0, 1, 0, 50.0)).unwrap();
        assert_eq!(q.table().get(0, 0, 1), 50.0);
        assert_eq!(q.param_count(), 4);
    }

    #[test]
    fn single_cell_changes() {
        let mut agent = FhqAgent::new(space(), StepSizeSchedule::constant(0.3)).unwrap();
        for (i, (t, s, a, sn)) in [(1, 0, 0, 1), (2, 1, 1, 0), (1, 1, 0, 1), (2, 0, 1, 1)]
            .into_iter()
            .enumerate()
        {
            let before = agent.table().values().to_vec();
            agent.update(&tr(t, s, a, sn, 1.0 + i as f64)).unwrap();
            assert_eq!(diff_count(&before, agent.table().values()), 1);
        }
    }

    #[test]
    fn greedy_tie_and_unique_max() {
        let space = StateActionSpace::new(vec![3], vec![5], 2).unwrap();
        let mut agent = FhqAgent::new(space, StepSizeSchedule::constant(0.1)).unwrap();
        assert_eq!(agent.greedy_action(1, &[2]).unwrap().0, vec![0]);
        agent.table_mut().set(0, 2, 3, 1.0);
        assert_eq!(agent.greedy_action(1, &[2]).unwrap().0, vec![3]);
        assert_eq!(agent.greedy_action(2, &[2]).unwrap().0, vec![0]);
        assert!(agent.greedy_action(3, &[2]).is_err());
    }

    #[test]
    fn inverse_visit_count_schedule() {
        let s = StepSizeSchedule::inverse_visit_count(1.0);
        assert_eq!(s.alpha(0), 1.0);
        assert_eq!(s.alpha(3), 0.25);
        assert!(StepSizeSchedule::constant(-1.0).validate().is_err());
        assert!(StepSizeSchedule::constant(f64::NAN).validate().is_err());
    }

    #[test]
    fn param_counts() {
        let grid = StateActionSpace::new(vec![5, 5], vec![4], 5).unwrap();
        let step = StepSizeSchedule::constant(0.1);
        assert_eq!(
            FhqAgent::new(grid.clone(), step).unwrap().param_count(),
            500
        );
        assert_eq!(
            StationaryQAgent::new(grid, step).unwrap().param_count(),
            100
        );
    }
}
