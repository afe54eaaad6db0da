use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::agent::ActorCritic;
use super::buffer::RolloutBuffer;
use super::config::PpoConfig;
use super::update::{ppo_update, OptimizerPair, UpdateMetrics};
use crate::envs::{Env, EnvId};
use crate::error::{Error, Result};
use crate::harness::{LogRow, RunLog};
use crate::schedule::Schedule;

/// Rollout collection and updates for one seeded run. All randomness
/// (initialization, environment seeds, action sampling, minibatch order)
/// comes from a single generator seeded at construction.
pub struct Trainer {
    env_id: EnvId,
    config: PpoConfig,
    envs: Vec<Box<dyn Env>>,
    obs: Vec<Vec<f64>>,
    episode_return: Vec<f64>,
    agent: ActorCritic,
    opt: OptimizerPair,
    rng: ChaCha8Rng,
    env_steps: u64,
    updates: u64,
}

impl Trainer {
    pub fn new(env_id: EnvId, config: PpoConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut envs: Vec<Box<dyn Env>> = (0..config.n_envs).map(|_| env_id.make()).collect();
        let agent = ActorCritic::new(envs[0].spec(), &config.hidden, &mut rng)?;
        let opt = OptimizerPair::new(&config.optimizer, &agent);
        let obs = envs.iter_mut().map(|e| e.reset(rng.random())).collect();
        Ok(Trainer { env_id, episode_return: vec![0.0; config.n_envs], config, envs, obs, agent, opt, rng, env_steps: 0, updates: 0 })
    }

    pub fn env_id(&self) -> EnvId {
        self.env_id
    }

    pub fn config(&self) -> &PpoConfig {
        &self.config
    }

    pub fn agent(&self) -> &ActorCritic {
        &self.agent
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Collects `rollout_steps` from every environment instance (instance 0
    /// first) and computes advantages. `on_episode(env_step, reward)` fires
    /// for every completed episode, `env_step` being the global step count
    /// after the step that ended it.
    pub fn collect_rollout(&mut self, mut on_episode: impl FnMut(u64, f64)) -> Result<RolloutBuffer> {
        let steps = self.config.rollout_steps;
        let mut buffer = RolloutBuffer::new(self.updates, self.config.n_envs, steps);
        let mut bootstrap = Vec::with_capacity(self.config.n_envs);
        for e in 0..self.config.n_envs {
            let mut ended = false;
            for _ in 0..steps {
                let obs = std::mem::take(&mut self.obs[e]);
                let (action, log_prob, value) = self.agent.act(&obs, &mut self.rng)?;
                let tr = self.envs[e].step(&action)?;
                self.env_steps += 1;
                self.episode_return[e] += tr.reward;
                ended = tr.episode_over();
                buffer.push(obs, action, tr.reward, value, log_prob, ended)?;
                if ended {
                    on_episode(self.env_steps, self.episode_return[e]);
                    self.episode_return[e] = 0.0;
                    self.obs[e] = self.envs[e].reset(self.rng.random());
                } else {
                    self.obs[e] = tr.observation;
                }
            }
            bootstrap.push(if ended { 0.0 } else { self.agent.value_of(&self.obs[e])? });
        }
        buffer.compute_gae(self.config.gamma, self.config.gae_lambda, &bootstrap)?;
        Ok(buffer)
    }

    pub fn update(&mut self, buffer: &mut RolloutBuffer, lr: f64, momentum: f64) -> Result<UpdateMetrics> {
        let m = ppo_update(buffer, &mut self.agent, &mut self.opt, lr, momentum, &self.config, &mut self.rng)?;
        self.updates += 1;
        Ok(m)
    }
}

/// Trains until at least `total_steps` environment steps have been taken.
///
/// The schedule is indexed by update count. Every completed episode adds a
/// row with its reward; every update adds a row with its loss metrics (the
/// two merge when an episode ends on the last step before an update).
/// Divergence ends the run early with `diverged` set.
pub fn train(env_id: EnvId, schedule: &Schedule, config: &PpoConfig, seed: u64, total_steps: u64) -> Result<RunLog> {
    train_agent(env_id, schedule, config, seed, total_steps).map(|(log, _)| log)
}

/// [`train`], also returning the final networks.
pub fn train_agent(env_id: EnvId, schedule: &Schedule, config: &PpoConfig, seed: u64, total_steps: u64) -> Result<(RunLog, ActorCritic)> {
    let mut trainer = Trainer::new(env_id, config.clone(), seed)?;
    let mut log = RunLog::new(format!("{}-{}", schedule.policy.kind(), seed), schedule.policy.kind().as_str(), env_id.as_str(), seed);

    while trainer.env_steps() < total_steps {
        let update_index = trainer.updates();
        let (lr, momentum) = schedule.at(update_index);
        let rows = &mut log.rows;
        let collected = trainer.collect_rollout(|env_step, reward| {
            rows.push(LogRow::episode(env_step, update_index, reward, lr, momentum));
        });
        let mut buffer = collected?;
        match trainer.update(&mut buffer, lr, momentum) {
            Ok(m) => log.record_update(trainer.env_steps(), update_index, lr, momentum, &m),
            Err(Error::Diverged(reason)) => {
                log.mark_diverged(reason);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((log, trainer.agent))
}
