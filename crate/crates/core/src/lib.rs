//! Simulation and planning toolkit for a UAV collecting data from ground
//! users over Lambertian visible-light links.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: link gain, capacity, threshold inversion and the two
//!   horizontal radii (communication and reception).
//! - [`altitude`]: closed-form optimal flight altitude plus a brute-force
//!   grid oracle.
//! - [`env`]: the episodic data-collection MDP with pheromone shaping.
//! - [`td3`]: a small dense network library and the TD3 learner.
//! - [`baselines`]: SCAN, GREEDY-RRT and ACO-RRT planners that replay their
//!   plans through [`env`] for identical accounting.

pub mod altitude;
pub mod baselines;
pub mod channel;
pub mod env;
mod error;
pub mod td3;

pub use error::{Error, Result};
