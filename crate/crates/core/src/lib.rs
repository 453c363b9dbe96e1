//! Age-of-Information scheduling for two-hop relayed IoT networks.
//!
//! The crate bundles a slotted network simulator with lossy access and
//! backhaul links, four non-learning schedulers, and a PPO scheduler whose
//! actor emits one vote per device and link so that its output grows as
//! `2M` instead of with the combinatorial number of joint schedules.

pub mod baselines;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod network;
pub mod nn;
pub mod par;
pub mod vppo;

pub use error::{Error, Result};
