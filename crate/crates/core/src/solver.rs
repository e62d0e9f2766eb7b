//! Backward induction over explicit dynamics. This is the ground truth the
//! learners are checked against.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Dense `P^a_{ss'}`, `R^a_s` and an initial-state distribution over flat
/// state and action indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitDynamics {
    n_states: usize,
    n_actions: usize,
    /// `[s][a][s']`, row-major.
    transition: Vec<f64>,
    /// `[s][a]`, row-major.
    reward: Vec<f64>,
    initial: Vec<f64>,
}

fn check_distribution(what: &'static str, row: &[f64]) -> Result<()> {
    if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::invalid(
            what,
            "entries must be finite and non-negative",
        ));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::invalid(what, format!("entries sum to {sum}, not 1")));
    }
    Ok(())
}

impl ExplicitDynamics {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid(
                "dynamics",
                "need at least one state and action",
            ));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(Error::Shape(format!(
                "transition has {} entries, expected {}",
                transition.len(),
                n_states * n_actions * n_states
            )));
        }
        if reward.len() != n_states * n_actions {
            return Err(Error::Shape(format!(
                "reward has {} entries, expected {}",
                reward.len(),
                n_states * n_actions
            )));
        }
        if initial.len() != n_states {
            return Err(Error::Shape(format!(
                "initial distribution has {} entries, expected {n_states}",
                initial.len()
            )));
        }
        for row in transition.chunks(n_states) {
            check_distribution("transition row", row)?;
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("reward", "entries must be finite"));
        }
        check_distribution("initial distribution", &initial)?;
        Ok(ExplicitDynamics {
            n_states,
            n_actions,
            transition,
            reward,
            initial,
        })
    }

    /// Deterministic dynamics from a successor table `next[s][a]`.
    pub fn deterministic(
        n_states: usize,
        n_actions: usize,
        next: &[usize],
        reward: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if next.len() != n_states * n_actions {
            return Err(Error::Shape("successor table has the wrong length".into()));
        }
        let mut transition = vec![0.0; n_states * n_actions * n_states];
        for (sa, &s_next) in next.iter().enumerate() {
            if s_next >= n_states {
                return Err(Error::Index {
                    dim: 0,
                    index: s_next,
                    size: n_states,
                });
            }
            transition[sa * n_states + s_next] = 1.0;
        }
        Self::new(n_states, n_actions, transition, reward, initial)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize, s_next: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + s_next]
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    fn expected_next(&self, s: usize, a: usize, values: &[f64]) -> f64 {
        self.row(s, a)
            .iter()
            .zip(values)
            .filter(|(p, _)| **p != 0.0)
            .map(|(p, v)| p * v)
            .sum()
    }
}

/// `Q*` for every time slot, the greedy non-stationary policy, and the
/// expected optimal return from the initial distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSolution {
    /// Shape `(T, |S|, |A|)`; axis 0 is the 0-based time slot.
    pub q_star: Array3<f64>,
    /// Shape `(T, |S|)`.
    pub pi_star: Array2<usize>,
    pub v_start: f64,
}

impl OptimalSolution {
    pub fn horizon(&self) -> usize {
        self.q_star.dim().0
    }

    /// `Q*_t(s, a)` with 1-based `t`.
    pub fn q(&self, t: usize, s: usize, a: usize) -> f64 {
        self.q_star[[t - 1, s, a]]
    }

    /// `π*_t(s)` with 1-based `t`.
    pub fn policy(&self, t: usize, s: usize) -> usize {
        self.pi_star[[t - 1, s]]
    }
}

/// Index of the maximum, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn backward_induction(dynamics: &ExplicitDynamics, horizon: usize) -> Result<OptimalSolution> {
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be >= 1"));
    }
    let (ns, na) = (dynamics.n_states, dynamics.n_actions);
    let mut q_star = Array3::<f64>::zeros((horizon, ns, na));
    let mut pi_star = Array2::<usize>::zeros((horizon, ns));
    // V_{t+1}; zero beyond the horizon so the last slot reduces to R.
    let mut v_next = vec![0.0; ns];
    for slot in (0..horizon).rev() {
        let last = slot + 1 == horizon;
        let mut v_here = vec![0.0; ns];
        for s in 0..ns {
            for a in 0..na {
                let mut q = dynamics.reward(s, a);
                if !last {
                    q += dynamics.expected_next(s, a, &v_next);
                }
                q_star[[slot, s, a]] = q;
            }
            let row = q_star.slice(ndarray::s![slot, s, ..]);
            let best = argmax(row.as_slice().expect("contiguous"));
            pi_star[[slot, s]] = best;
            v_here[s] = q_star[[slot, s, best]];
        }
        v_next = v_here;
    }
    let v_start = dynamics
        .initial
        .iter()
        .zip(&v_next)
        .map(|(p, v)| p * v)
        .sum();
    Ok(OptimalSolution {
        q_star,
        pi_star,
        v_start,
    })
}

fn check_policy(dynamics: &ExplicitDynamics, policy: &Array2<usize>) -> Result<()> {
    let (horizon, ns) = policy.dim();
    if horizon == 0 {
        return Err(Error::invalid("policy", "horizon must be >= 1"));
    }
    if ns != dynamics.n_states {
        return Err(Error::Shape(format!(
            "policy covers {ns} states, dynamics have {}",
            dynamics.n_states
        )));
    }
    if let Some(&a) = policy.iter().find(|&&a| a >= dynamics.n_actions) {
        return Err(Error::Index {
            dim: 0,
            index: a,
            size: dynamics.n_actions,
        });
    }
    Ok(())
}

/// `Q^π_t(s, a)` for a deterministic non-stationary policy given as a
/// `(T, |S|)` action table.
pub fn policy_q(dynamics: &ExplicitDynamics, policy: &Array2<usize>) -> Result<Array3<f64>> {
    check_policy(dynamics, policy)?;
    let horizon = policy.dim().0;
    let (ns, na) = (dynamics.n_states, dynamics.n_actions);
    let mut q = Array3::<f64>::zeros((horizon, ns, na));
    let mut v_next = vec![0.0; ns];
    for slot in (0..horizon).rev() {
        let last = slot + 1 == horizon;
        for s in 0..ns {
            for a in 0..na {
                let mut val = dynamics.reward(s, a);
                if !last {
                    val += dynamics.expected_next(s, a, &v_next);
                }
                q[[slot, s, a]] = val;
            }
        }
        v_next = (0..ns).map(|s| q[[slot, s, policy[[slot, s]]]]).collect();
    }
    Ok(q)
}

/// Exact expected return of `policy` from `init_dist`.
pub fn policy_value(
    dynamics: &ExplicitDynamics,
    policy: &Array2<usize>,
    init_dist: &[f64],
) -> Result<f64> {
    if init_dist.len() != dynamics.n_states {
        return Err(Error::Shape(format!(
            "initial distribution has {} entries, expected {}",
            init_dist.len(),
            dynamics.n_states
        )));
    }
    check_distribution("initial distribution", init_dist)?;
    let q = policy_q(dynamics, policy)?;
    Ok(init_dist
        .iter()
        .enumerate()
        .map(|(s, p)| p * q[[0, s, policy[[0, s]]]])
        .sum())
}
