//! Twin-delayed deep deterministic policy gradient.
//!
//! Twin critics regress onto `r + γ min(Q′₁, Q′₂)` evaluated at a smoothed
//! target action; the actor and all three target networks move only every
//! `policy_delay` critic updates.

mod agent;
pub mod nn;
mod replay;

pub use agent::{
    td_targets, Checkpoint, Td3Agent, Td3Config, UpdateReport, ACTION_DIM, CHECKPOINT_VERSION,
};
pub use nn::{grad_check, Activation, Adam, GradCheckReport, LossSpec, Mlp};
pub use replay::{ReplayBuffer, Transition};
