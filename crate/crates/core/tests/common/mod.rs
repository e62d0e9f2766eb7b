#![allow(dead_code)]

use fhtlr::rng::{self, Rng};
use fhtlr::{ExplicitDynamics, ParafacModel};
use rand::Rng as _;

/// Random MDP with dense stochastic rows and rewards in `[-1, 1)`.
pub fn random_mdp(n_states: usize, n_actions: usize, seed: u64) -> ExplicitDynamics {
    let mut r = rng::stream(seed, 7);
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        let raw: Vec<f64> = (0..n_states).map(|_| r.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let mut row: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        let head: f64 = row[..n_states - 1].iter().sum();
        row[n_states - 1] = 1.0 - head;
        transition.extend(row);
    }
    let reward = (0..n_states * n_actions)
        .map(|_| r.random_range(-1.0..1.0))
        .collect();
    let initial = vec![1.0 / n_states as f64; n_states];
    ExplicitDynamics::new(n_states, n_actions, transition, reward, initial).unwrap()
}

/// Every deterministic non-stationary policy, as `policy[t][s]`.
pub fn all_policies(n_states: usize, n_actions: usize, horizon: usize) -> Vec<Vec<Vec<usize>>> {
    let cells = n_states * horizon;
    let total = n_actions.pow(cells as u32);
    (0..total)
        .map(|mut code| {
            let mut p = vec![vec![0; n_states]; horizon];
            for slot in p.iter_mut() {
                for a in slot.iter_mut() {
                    *a = code % n_actions;
                    code /= n_actions;
                }
            }
            p
        })
        .collect()
}

/// `Q^π` at 0-based slot `t` by expanding the trajectory tree.
pub fn tree_q(d: &ExplicitDynamics, policy: &[Vec<usize>], t: usize, s: usize, a: usize) -> f64 {
    let mut v = d.reward(s, a);
    if t + 1 < policy.len() {
        for s2 in 0..d.n_states() {
            let p = d.prob(s, a, s2);
            if p > 0.0 {
                v += p * tree_q(d, policy, t + 1, s2, policy[t + 1][s2]);
            }
        }
    }
    v
}

/// `max_π Q^π_t(s, a)` over every deterministic policy, indexed `[t][s][a]`.
pub fn enumerated_q_star(d: &ExplicitDynamics, horizon: usize) -> Vec<Vec<Vec<f64>>> {
    let (ns, na) = (d.n_states(), d.n_actions());
    let mut best = vec![vec![vec![f64::NEG_INFINITY; na]; ns]; horizon];
    for p in all_policies(ns, na, horizon) {
        for t in 0..horizon {
            for s in 0..ns {
                for a in 0..na {
                    let v = tree_q(d, &p, t, s, a);
                    if v > best[t][s][a] {
                        best[t][s][a] = v;
                    }
                }
            }
        }
    }
    best
}

pub fn loss(model: &ParafacModel, idx: &[usize], q_hat: f64) -> f64 {
    let e = q_hat - model.eval_entry(idx).unwrap();
    0.5 * e * e
}

/// Central finite-difference gradient of `½(q̂ − Q[idx])²` with respect to
/// row `idx[mode]` of factor `mode`.
pub fn fd_row_gradient(
    model: &ParafacModel,
    idx: &[usize],
    q_hat: f64,
    mode: usize,
    h: f64,
) -> Vec<f64> {
    (0..model.rank())
        .map(|k| {
            let mut plus = model.clone();
            plus.factor_mut(mode)[[idx[mode], k]] += h;
            let mut minus = model.clone();
            minus.factor_mut(mode)[[idx[mode], k]] -= h;
            (loss(&plus, idx, q_hat) - loss(&minus, idx, q_hat)) / (2.0 * h)
        })
        .collect()
}

pub fn random_index(dims: &[usize], r: &mut Rng) -> Vec<usize> {
    dims.iter().map(|&n| r.random_range(0..n)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
