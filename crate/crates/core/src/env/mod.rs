//! Benchmark environments.

pub mod gridworld;
pub mod two_state;
pub mod wireless;

pub use gridworld::{GridWorld, GridWorldConfig};
pub use two_state::{TwoState, TwoStateConfig};
pub use wireless::{Wireless, WirelessConfig, WirelessState};
