//! CSV dumps of dense value tensors and policies.
//!
//! Value tensor: header `t,s0..s{DS-1},a0..a{DA-1},value`, one row per
//! entry, `t` 1-based and varying slowest, then states, then actions in
//! mixed-radix order. Policy: header `t,s0..,a0..`, one row per `(t, s)`.

use std::io::Write;

use crate::error::Result;
use crate::experiment::fmt_f64;
use crate::mdp::{Agent, StateActionSpace};
use crate::solver::OptimalSolution;

fn header(space: &StateActionSpace, last: Option<&str>) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..space.state_dims().len()).map(|i| format!("s{i}")));
    h.extend((0..space.action_dims().len()).map(|j| format!("a{j}")));
    h.extend(last.map(str::to_string));
    h
}

/// Writes every `q(t, s, a)` (1-based `t`, flat `s` and `a`).
pub fn write_q_tensor<W: Write>(
    out: W,
    space: &StateActionSpace,
    mut q: impl FnMut(usize, usize, usize) -> Result<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(space, Some("value")))?;
    for t in 1..=space.horizon() {
        for s in 0..space.n_states() {
            let s_idx = space.state_index(s)?;
            for a in 0..space.n_actions() {
                let a_idx = space.action_index(a)?;
                let mut rec = vec![t.to_string()];
                rec.extend(s_idx.iter().chain(a_idx.iter()).map(|c| c.to_string()));
                rec.push(fmt_f64(q(t, s, a)?));
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_policy<W: Write>(
    out: W,
    space: &StateActionSpace,
    mut policy: impl FnMut(usize, usize) -> Result<usize>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(space, None))?;
    for t in 1..=space.horizon() {
        for s in 0..space.n_states() {
            let s_idx = space.state_index(s)?;
            let a_idx = space.action_index(policy(t, s)?)?;
            let mut rec = vec![t.to_string()];
            rec.extend(s_idx.iter().chain(a_idx.iter()).map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_solution<W: Write>(
    q_out: W,
    policy_out: W,
    space: &StateActionSpace,
    sol: &OptimalSolution,
) -> Result<()> {
    write_q_tensor(q_out, space, |t, s, a| Ok(sol.q(t, s, a)))?;
    write_policy(policy_out, space, |t, s| Ok(sol.policy(t, s)))
}

pub fn write_agent_q<W: Write>(out: W, agent: &dyn Agent) -> Result<()> {
    let space = agent.space().clone();
    write_q_tensor(out, &space, |t, s, a| {
        agent.q_value(t, &space.state_index(s)?, &space.action_index(a)?)
    })
}
