use rand::Rng;

use crate::envs::{ActionSpace, EnvSpec};
use crate::error::{Error, Result};
use crate::nn::{Action, DistGrad, DistParams, ForwardCache, Mlp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Categorical,
    Gaussian,
}

/// Separate policy and value networks. Gaussian policies carry a
/// state-independent log-std vector that is trained with the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub policy: Mlp,
    pub value: Mlp,
    pub log_std: Option<Vec<f64>>,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(spec: &EnvSpec, hidden: &[usize], rng: &mut R) -> Result<Self> {
        let widths = |out: usize| -> Vec<usize> {
            let mut w = vec![spec.obs_dim];
            w.extend_from_slice(hidden);
            w.push(out);
            w
        };
        let hidden_gain = 2f64.sqrt();
        let n_out = spec.action_space.dim();
        let policy = Mlp::orthogonal(&widths(n_out), hidden_gain, 0.01, rng)?;
        let value = Mlp::orthogonal(&widths(1), hidden_gain, 1.0, rng)?;
        let log_std = match spec.action_space {
            ActionSpace::Discrete(_) => None,
            ActionSpace::Box { .. } => Some(vec![0.0; n_out]),
        };
        Ok(ActorCritic { policy, value, log_std })
    }

    pub fn head(&self) -> Head {
        if self.log_std.is_some() {
            Head::Gaussian
        } else {
            Head::Categorical
        }
    }

    pub fn dist_from_output(&self, out: Vec<f64>) -> DistParams {
        match &self.log_std {
            None => DistParams::categorical(out),
            Some(ls) => DistParams::gaussian(out, ls.clone()),
        }
    }

    pub fn dist(&self, obs: &[f64]) -> Result<DistParams> {
        Ok(self.dist_from_output(self.policy.forward(obs)?))
    }

    pub fn value_of(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.value.forward(obs)?[0])
    }

    /// Policy network parameters followed by the log-std vector.
    pub fn policy_params(&self) -> Vec<f64> {
        let mut p = self.policy.params();
        if let Some(ls) = &self.log_std {
            p.extend_from_slice(ls);
        }
        p
    }

    pub fn n_policy_params(&self) -> usize {
        self.policy.n_params() + self.log_std.as_ref().map_or(0, Vec::len)
    }

    pub fn set_policy_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_policy_params() {
            return Err(Error::ShapeMismatch { expected: self.n_policy_params(), actual: flat.len() });
        }
        let n = self.policy.n_params();
        self.policy.set_params(&flat[..n])?;
        if let Some(ls) = &mut self.log_std {
            ls.copy_from_slice(&flat[n..]);
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.policy_params().iter().chain(self.value.params().iter()).all(|v| v.is_finite())
    }

    /// Accumulates `scale * dL/d(dist params)` into the flat policy gradient.
    pub(crate) fn accumulate_policy_grad(&self, cache: &ForwardCache, grad: &DistGrad, scale: f64, out: &mut [f64]) -> Result<()> {
        let n = self.policy.n_params();
        let (net_grad, ls_grad) = out.split_at_mut(n);
        match grad {
            DistGrad::Categorical { logits } => self.policy.backward_accumulate(cache, logits, scale, net_grad),
            DistGrad::Gaussian { mean, log_std } => {
                self.policy.backward_accumulate(cache, mean, scale, net_grad)?;
                for (o, g) in ls_grad.iter_mut().zip(log_std) {
                    *o += scale * g;
                }
                Ok(())
            }
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(Action, f64, f64)> {
        let dist = self.dist(obs)?;
        let (action, lp) = dist.sample(rng);
        Ok((action, lp, self.value_of(obs)?))
    }
}
