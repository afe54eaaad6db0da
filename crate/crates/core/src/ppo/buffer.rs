use super::advantage::gae;
use crate::error::{Error, Result};
use crate::nn::Action;

/// One batch of on-policy experience from `n_streams` environment
/// instances, each contributing `steps_per_stream` consecutive steps.
/// Stream `e` occupies indices `e * steps_per_stream ..`.
///
/// A buffer feeds exactly one update phase; [`RolloutBuffer::consume`]
/// enforces that.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    generation: u64,
    n_streams: usize,
    steps_per_stream: usize,
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub log_probs: Vec<f64>,
    /// Episode ended (terminated or truncated) on this step.
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    advantages_ready: bool,
    consumed: bool,
}

impl RolloutBuffer {
    pub fn new(generation: u64, n_streams: usize, steps_per_stream: usize) -> Self {
        let cap = n_streams * steps_per_stream;
        RolloutBuffer {
            generation,
            n_streams,
            steps_per_stream,
            observations: vec![Vec::new(); cap],
            actions: vec![Action::Discrete(0); cap],
            rewards: vec![0.0; cap],
            values: vec![0.0; cap],
            log_probs: vec![0.0; cap],
            dones: vec![false; cap],
            advantages: Vec::new(),
            returns: Vec::new(),
            advantages_ready: false,
            consumed: false,
        }
        .cleared()
    }

    fn cleared(mut self) -> Self {
        self.observations.clear();
        self.actions.clear();
        self.rewards.clear();
        self.values.clear();
        self.log_probs.clear();
        self.dones.clear();
        self
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn capacity(&self) -> usize {
        self.n_streams * self.steps_per_stream
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.capacity()
    }

    pub fn advantages_ready(&self) -> bool {
        self.advantages_ready
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    /// Appends a step to the stream currently being filled (streams are
    /// filled one after another).
    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, obs: Vec<f64>, action: Action, reward: f64, value: f64, log_prob: f64, done: bool) -> Result<()> {
        if self.is_full() {
            return Err(Error::config("rollout buffer is full"));
        }
        self.observations.push(obs);
        self.actions.push(action);
        self.rewards.push(reward);
        self.values.push(value);
        self.log_probs.push(log_prob);
        self.dones.push(done);
        self.advantages_ready = false;
        Ok(())
    }

    /// Fills `advantages` and `returns` stream by stream. `bootstrap_values[e]`
    /// is the value estimate after the last step of stream `e` (0 if that
    /// step ended an episode).
    pub fn compute_gae(&mut self, gamma: f64, gae_lambda: f64, bootstrap_values: &[f64]) -> Result<()> {
        if !self.is_full() {
            return Err(Error::IncompleteBuffer { filled: self.len(), capacity: self.capacity() });
        }
        if bootstrap_values.len() != self.n_streams {
            return Err(Error::ShapeMismatch { expected: self.n_streams, actual: bootstrap_values.len() });
        }
        self.advantages.clear();
        self.returns.clear();
        for (e, &boot) in bootstrap_values.iter().enumerate() {
            let span = e * self.steps_per_stream..(e + 1) * self.steps_per_stream;
            let (adv, ret) = gae(&self.rewards[span.clone()], &self.values[span.clone()], &self.dones[span], gamma, gae_lambda, boot);
            self.advantages.extend(adv);
            self.returns.extend(ret);
        }
        self.advantages_ready = true;
        Ok(())
    }

    /// Marks the buffer as used by an update phase.
    pub(crate) fn consume(&mut self) -> Result<()> {
        if !self.advantages_ready {
            return Err(Error::IncompleteBuffer { filled: self.len(), capacity: self.capacity() });
        }
        if self.consumed {
            return Err(Error::BufferConsumed(self.generation));
        }
        self.consumed = true;
        Ok(())
    }
}
