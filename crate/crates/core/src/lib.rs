//! Cyclical learning-rate and momentum schedules applied to a from-scratch
//! clipped PPO trainer.
//!
//! - [`schedule`]: step-indexed triangular / exp_range learning rates and
//!   counter-cycled momentum.
//! - [`optimize`]: Adam and SGD-momentum updates with externally supplied
//!   learning rate and momentum.
//! - [`nn`]: tanh MLPs with analytic gradients; categorical and Gaussian heads.
//! - [`envs`]: CartPole, Pendulum and a tabular chain MDP.
//! - [`ppo`]: rollouts, GAE, the clipped surrogate and the training loop.
//! - [`harness`]: experiments, the learning-rate range test, CSV logs, plots.

pub mod envs;
pub mod error;
pub mod harness;
pub mod nn;
pub mod optimize;
pub mod ppo;
pub mod schedule;

pub use error::{Error, Result};
