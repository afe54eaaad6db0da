//! Episodic environments behind one interface, plus a tabular MDP used as an
//! exact-probability oracle.

mod cartpole;
mod chain;
mod pendulum;

pub use cartpole::CartPole;
pub use chain::{trajectory_probability, ChainMdp, Trajectory};
pub use pendulum::Pendulum;

use crate::error::{Error, Result};
use crate::nn::Action;

#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    Discrete(usize),
    Box { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete(n) => *n,
            ActionSpace::Box { low, .. } => low.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub obs_dim: usize,
    pub action_space: ActionSpace,
    pub max_episode_steps: usize,
    pub reward_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// Terminal state reached.
    pub done: bool,
    /// Episode cut off by the step limit.
    pub truncated: bool,
}

impl Transition {
    pub fn episode_over(&self) -> bool {
        self.done || self.truncated
    }
}

pub trait Env: Send {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode; the initial state depends only on `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advances one step. Fails with [`Error::EpisodeOver`] once the episode
    /// has ended, until the next reset.
    fn step(&mut self, action: &Action) -> Result<Transition>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvId {
    CartPole,
    Pendulum,
    Chain,
}

impl EnvId {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::CartPole => "cartpole",
            EnvId::Pendulum => "pendulum",
            EnvId::Chain => "chain",
        }
    }

    pub fn make(self) -> Box<dyn Env> {
        match self {
            EnvId::CartPole => Box::new(CartPole::new()),
            EnvId::Pendulum => Box::new(Pendulum::new()),
            EnvId::Chain => Box::new(ChainMdp::slippery_chain(5, 0.1, 20)),
        }
    }
}

impl std::str::FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cartpole" | "cartpole-v0" => Ok(EnvId::CartPole),
            "pendulum" | "pendulum-v0" => Ok(EnvId::Pendulum),
            "chain" => Ok(EnvId::Chain),
            _ => Err(Error::UnknownEnv(s.to_string())),
        }
    }
}

impl std::fmt::Display for EnvId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn make_env(id: &str) -> Result<Box<dyn Env>> {
    Ok(id.parse::<EnvId>()?.make())
}
