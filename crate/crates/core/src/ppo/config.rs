use crate::envs::EnvId;
use crate::error::{Error, Result};
use crate::optimize::OptimizerConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    /// Steps collected per environment instance before each update.
    pub rollout_steps: usize,
    pub n_envs: usize,
    pub update_epochs: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    /// Hidden widths shared by the policy and value networks.
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            rollout_steps: 2048,
            n_envs: 1,
            update_epochs: 4,
            minibatch_size: 64,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_grad_norm: 0.5,
            hidden: vec![64, 64],
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl PpoConfig {
    /// Per-environment defaults.
    pub fn for_env(env: EnvId) -> Self {
        match env {
            EnvId::CartPole => PpoConfig { rollout_steps: 128, n_envs: 8, minibatch_size: 256, entropy_coef: 0.0, ..Default::default() },
            EnvId::Pendulum => PpoConfig { minibatch_size: 64, ..Default::default() },
            EnvId::Chain => PpoConfig { rollout_steps: 64, n_envs: 4, minibatch_size: 64, ..Default::default() },
        }
    }

    pub fn batch_size(&self) -> usize {
        self.rollout_steps * self.n_envs
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return fail(format!("gae_lambda must lie in [0, 1], got {}", self.gae_lambda));
        }
        if self.clip_epsilon.is_nan() || self.clip_epsilon <= 0.0 {
            return fail("clip_epsilon must be positive".into());
        }
        if self.rollout_steps == 0 || self.n_envs == 0 || self.update_epochs == 0 || self.minibatch_size == 0 {
            return fail("rollout_steps, n_envs, update_epochs and minibatch_size must be >= 1".into());
        }
        if !self.batch_size().is_multiple_of(self.minibatch_size) {
            return fail(format!("minibatch_size {} does not divide rollout_steps * n_envs = {}", self.minibatch_size, self.batch_size()));
        }
        if !(self.value_coef >= 0.0 && self.entropy_coef >= 0.0) {
            return fail("value_coef and entropy_coef must be >= 0".into());
        }
        if self.max_grad_norm.is_nan() || self.max_grad_norm <= 0.0 {
            return fail("max_grad_norm must be positive".into());
        }
        if self.hidden.contains(&0) {
            return fail("hidden widths must be >= 1".into());
        }
        self.optimizer.validate()
    }

    /// Applies a `key = value` override (keys as in the experiment config,
    /// without the `ppo.` prefix).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::config(format!("bad value `{v}` for {key}")))
        }
        match key {
            "gamma" => self.gamma = num(key, value)?,
            "gae_lambda" => self.gae_lambda = num(key, value)?,
            "clip_epsilon" => self.clip_epsilon = num(key, value)?,
            "rollout_steps" => self.rollout_steps = num(key, value)?,
            "n_envs" => self.n_envs = num(key, value)?,
            "update_epochs" => self.update_epochs = num(key, value)?,
            "minibatch_size" => self.minibatch_size = num(key, value)?,
            "value_coef" => self.value_coef = num(key, value)?,
            "entropy_coef" => self.entropy_coef = num(key, value)?,
            "max_grad_norm" => self.max_grad_norm = num(key, value)?,
            "hidden" => {
                self.hidden = value.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s.trim())).collect::<Result<_>>()?
            }
            "optimizer" => self.optimizer.kind = value.parse()?,
            "beta2" => self.optimizer.beta2 = num(key, value)?,
            "epsilon" => self.optimizer.epsilon = num(key, value)?,
            "momentum_ceiling" | "beta1_ceiling" => self.optimizer.momentum_ceiling = num(key, value)?,
            other => return Err(Error::config(format!("unknown ppo setting `{other}`"))),
        }
        Ok(())
    }
}
