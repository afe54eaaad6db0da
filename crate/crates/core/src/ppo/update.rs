use rand::seq::SliceRandom;
use rand::Rng;

use super::advantage::{normalize_advantages, unclipped_active};
use super::agent::ActorCritic;
use super::buffer::RolloutBuffer;
use super::config::PpoConfig;
use crate::error::{Error, Result};
use crate::nn::{Action, DistGrad};
use crate::optimize::{l2_norm, OptimizerConfig, OptimizerState};

/// Optimizer state for the policy and the value network.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerPair {
    pub policy: OptimizerState,
    pub value: OptimizerState,
}

impl OptimizerPair {
    pub fn new(config: &OptimizerConfig, agent: &ActorCritic) -> Self {
        OptimizerPair {
            policy: OptimizerState::new(config, agent.n_policy_params()),
            value: OptimizerState::new(config, agent.value.n_params()),
        }
    }
}

/// Loss components for one minibatch, or averages over an update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateMetrics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total_loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Samples the loss is evaluated on. Advantages are used as given.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    /// Gathers `indices` from the buffer and normalizes their advantages.
    pub fn gather(buffer: &RolloutBuffer, indices: &[usize]) -> Self {
        let mut advantages: Vec<f64> = indices.iter().map(|&i| buffer.advantages[i]).collect();
        normalize_advantages(&mut advantages);
        Minibatch {
            observations: indices.iter().map(|&i| buffer.observations[i].clone()).collect(),
            actions: indices.iter().map(|&i| buffer.actions[i].clone()).collect(),
            old_log_probs: indices.iter().map(|&i| buffer.log_probs[i]).collect(),
            advantages,
            returns: indices.iter().map(|&i| buffer.returns[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// `surrogate + value_coef * mse(V, R) - entropy_coef * entropy`, all means
/// over the minibatch.
pub fn minibatch_loss(agent: &ActorCritic, mb: &Minibatch, config: &PpoConfig) -> Result<UpdateMetrics> {
    Ok(evaluate(agent, mb, config, false)?.0)
}

/// Loss plus its gradient with respect to the policy parameters
/// ([`ActorCritic::policy_params`] order) and the value parameters.
pub fn minibatch_loss_and_grad(agent: &ActorCritic, mb: &Minibatch, config: &PpoConfig) -> Result<(UpdateMetrics, Vec<f64>, Vec<f64>)> {
    let (m, g) = evaluate(agent, mb, config, true)?;
    let (pg, vg) = g.expect("gradients requested");
    Ok((m, pg, vg))
}

type Grads = Option<(Vec<f64>, Vec<f64>)>;

fn evaluate(agent: &ActorCritic, mb: &Minibatch, config: &PpoConfig, want_grad: bool) -> Result<(UpdateMetrics, Grads)> {
    let n = mb.len();
    if n == 0 {
        return Err(Error::config("empty minibatch"));
    }
    let inv_n = 1.0 / n as f64;
    let eps = config.clip_epsilon;
    let mut pg = if want_grad { vec![0.0; agent.n_policy_params()] } else { Vec::new() };
    let mut vg = if want_grad { vec![0.0; agent.value.n_params()] } else { Vec::new() };
    let mut m = UpdateMetrics::default();

    for i in 0..n {
        let obs = &mb.observations[i];
        let adv = mb.advantages[i];

        let pcache = agent.policy.forward_cached(obs)?;
        let dist = agent.dist_from_output(pcache.output().to_vec());
        let lp = dist.log_prob(&mb.actions[i])?;
        let log_ratio = lp - mb.old_log_probs[i];
        let ratio = log_ratio.exp();
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        let surr = -(ratio * adv).min(clipped * adv);
        let ent = dist.entropy();
        m.policy_loss += surr * inv_n;
        m.entropy += ent * inv_n;
        m.approx_kl += 0.5 * log_ratio * log_ratio * inv_n;
        if (ratio - 1.0).abs() > eps {
            m.clip_fraction += inv_n;
        }

        let vcache = agent.value.forward_cached(obs)?;
        let v = vcache.output()[0];
        let err = v - mb.returns[i];
        m.value_loss += err * err * inv_n;

        if want_grad {
            // d surr / d lp is -A * ratio when the unclipped branch is active.
            let d_lp = if unclipped_active(ratio, adv, eps) { -adv * ratio } else { 0.0 };
            let lp_grad = dist.log_prob_grad(&mb.actions[i])?;
            let ent_grad = dist.entropy_grad();
            let combined = combine(&lp_grad, d_lp, &ent_grad, -config.entropy_coef);
            agent.accumulate_policy_grad(&pcache, &combined, inv_n, &mut pg)?;
            agent.value.backward_accumulate(&vcache, &[2.0 * err * config.value_coef], inv_n, &mut vg)?;
        }
    }
    m.total_loss = m.policy_loss + config.value_coef * m.value_loss - config.entropy_coef * m.entropy;
    Ok((m, want_grad.then_some((pg, vg))))
}

fn combine(a: &DistGrad, wa: f64, b: &DistGrad, wb: f64) -> DistGrad {
    let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| wa * p + wb * q).collect();
    match (a, b) {
        (DistGrad::Categorical { logits: x }, DistGrad::Categorical { logits: y }) => DistGrad::Categorical { logits: mix(x, y) },
        (DistGrad::Gaussian { mean: xm, log_std: xs }, DistGrad::Gaussian { mean: ym, log_std: ys }) => {
            DistGrad::Gaussian { mean: mix(xm, ym), log_std: mix(xs, ys) }
        }
        _ => unreachable!("gradients of one distribution share a kind"),
    }
}

/// One PPO update phase over `buffer`.
///
/// Runs `update_epochs` passes over shuffled minibatches, each a clipped,
/// optimizer-applied gradient step with the same `(lr, momentum)`. Returns
/// metrics averaged over all minibatches. A non-finite loss or parameter
/// aborts with [`Error::Diverged`].
#[allow(clippy::too_many_arguments)]
pub fn ppo_update<R: Rng + ?Sized>(
    buffer: &mut RolloutBuffer,
    agent: &mut ActorCritic,
    opt: &mut OptimizerPair,
    lr: f64,
    momentum: f64,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateMetrics> {
    buffer.consume()?;
    let n = buffer.len();
    let mb_size = config.minibatch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sum = UpdateMetrics::default();
    let mut count = 0usize;
    let mut policy_params = agent.policy_params();
    let mut value_params = agent.value.params();

    for _ in 0..config.update_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb_size) {
            let mb = Minibatch::gather(buffer, chunk);
            let (m, mut pg, mut vg) = minibatch_loss_and_grad(agent, &mb, config)?;
            if !m.total_loss.is_finite() {
                return Err(Error::Diverged(format!("non-finite loss {}", m.total_loss)));
            }
            let norm = (l2_norm(&pg).powi(2) + l2_norm(&vg).powi(2)).sqrt();
            if !norm.is_finite() {
                return Err(Error::Diverged(format!("non-finite gradient norm {norm}")));
            }
            if norm > config.max_grad_norm {
                let scale = config.max_grad_norm / norm;
                pg.iter_mut().chain(vg.iter_mut()).for_each(|g| *g *= scale);
            }
            opt.policy.step(&mut policy_params, &pg, lr, momentum)?;
            opt.value.step(&mut value_params, &vg, lr, momentum)?;
            agent.set_policy_params(&policy_params)?;
            agent.value.set_params(&value_params)?;
            if !agent.all_finite() {
                return Err(Error::Diverged("non-finite parameters".into()));
            }
            sum.policy_loss += m.policy_loss;
            sum.value_loss += m.value_loss;
            sum.entropy += m.entropy;
            sum.total_loss += m.total_loss;
            sum.approx_kl += m.approx_kl;
            sum.clip_fraction += m.clip_fraction;
            count += 1;
        }
    }
    let k = count.max(1) as f64;
    Ok(UpdateMetrics {
        policy_loss: sum.policy_loss / k,
        value_loss: sum.value_loss / k,
        entropy: sum.entropy / k,
        total_loss: sum.total_loss / k,
        approx_kl: sum.approx_kl / k,
        clip_fraction: sum.clip_fraction / k,
    })
}
