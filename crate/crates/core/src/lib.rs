//! Finite-horizon value-function learning with low-rank PARAFAC models.
//!
//! The crate is organised around two object-safe traits, [`Environment`] and
//! [`Agent`]. Concrete environments (grid world, wireless access, a two-state
//! fixture) and agents (stationary Q-learning, FHQ-learning, FHTLR-learning)
//! are registered by name in a [`Registry`] and selected at runtime from an
//! [`ExperimentConfig`].
//!
//! Time indices are 1-based (`1..=T`) at every public boundary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod env;
pub mod error;
pub mod experiment;
pub mod fhtlr;
pub mod mdp;
pub mod parafac;
pub mod registry;
pub mod rng;
pub mod solver;
pub mod tabular;
pub mod tensor_csv;

pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, RunRecord};
pub use fhtlr::{FhtlrAgent, FhtlrConfig, TargetEstimate, UpdateMode};
pub use mdp::{
    flatten, run_episode, train_episode, unflatten, Agent, Environment, Episode, EpsilonSchedule,
    MultiIndex, StateActionSpace, Step, Transition,
};
pub use parafac::{khatri_rao, unmatricize, ParafacModel};
pub use registry::Registry;
pub use solver::{backward_induction, policy_value, ExplicitDynamics, OptimalSolution};
pub use tabular::{FhqAgent, QTable, StationaryQAgent, StepSizeSchedule};
