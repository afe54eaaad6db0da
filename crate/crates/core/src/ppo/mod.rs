//! Clipped PPO: rollout collection, advantage estimation and the update
//! phase, driven by an external learning-rate/momentum schedule.

mod advantage;
mod agent;
mod buffer;
mod config;
mod train;
mod update;

pub use advantage::{clipped_surrogate_loss, discounted_return, gae, normalize_advantages};
pub use agent::{ActorCritic, Head};
pub use buffer::RolloutBuffer;
pub use config::PpoConfig;
pub use train::{train, train_agent, Trainer};
pub use update::{minibatch_loss, minibatch_loss_and_grad, ppo_update, Minibatch, OptimizerPair, UpdateMetrics};
