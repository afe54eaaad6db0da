//! Categorical and diagonal-Gaussian action distributions.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistParams {
    Categorical {
        logits: Vec<f64>,
    },
    /// `log_std` as supplied; it is clamped to `[LOG_STD_MIN, LOG_STD_MAX]`
    /// wherever it is used.
    Gaussian {
        mean: Vec<f64>,
        log_std: Vec<f64>,
    },
}

/// Gradient of a scalar with respect to the distribution parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum DistGrad {
    Categorical { logits: Vec<f64> },
    Gaussian { mean: Vec<f64>, log_std: Vec<f64> },
}

fn logsumexp(x: &[f64]) -> f64 {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = logsumexp(logits);
    logits.iter().map(|v| (v - lse).exp()).collect()
}

fn clamp_log_std(v: f64) -> f64 {
    v.clamp(LOG_STD_MIN, LOG_STD_MAX)
}

fn log_std_in_range(v: f64) -> bool {
    (LOG_STD_MIN..=LOG_STD_MAX).contains(&v)
}

impl DistParams {
    pub fn categorical(logits: Vec<f64>) -> Self {
        DistParams::Categorical { logits }
    }

    pub fn gaussian(mean: Vec<f64>, log_std: Vec<f64>) -> Self {
        DistParams::Gaussian { mean, log_std }
    }

    pub fn log_prob(&self, action: &Action) -> Result<f64> {
        match (self, action) {
            (DistParams::Categorical { logits }, Action::Discrete(a)) => {
                if *a >= logits.len() {
                    return Err(Error::ActionOutOfRange { action: *a, n: logits.len() });
                }
                Ok(logits[*a] - logsumexp(logits))
            }
            (DistParams::Gaussian { mean, log_std }, Action::Continuous(x)) => {
                if x.len() != mean.len() {
                    return Err(Error::ShapeMismatch { expected: mean.len(), actual: x.len() });
                }
                Ok(mean
                    .iter()
                    .zip(log_std)
                    .zip(x)
                    .map(|((m, ls), a)| {
                        let ls = clamp_log_std(*ls);
                        let z = (a - m) / ls.exp();
                        -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
                    })
                    .sum())
            }
            _ => Err(Error::config("action kind does not match distribution")),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            DistParams::Categorical { logits } => {
                let lse = logsumexp(logits);
                let h: f64 = logits
                    .iter()
                    .map(|v| {
                        let lp = v - lse;
                        let p = lp.exp();
                        if p > 0.0 {
                            -p * lp
                        } else {
                            0.0
                        }
                    })
                    .sum();
                h.max(0.0)
            }
            DistParams::Gaussian { log_std, .. } => {
                log_std.iter().map(|ls| 0.5 * (2.0 * PI * std::f64::consts::E).ln() + clamp_log_std(*ls)).sum()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Action, f64) {
        let action = match self {
            DistParams::Categorical { logits } => {
                let probs = softmax(logits);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = probs.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                Action::Discrete(pick)
            }
            DistParams::Gaussian { mean, log_std } => Action::Continuous(
                mean.iter().zip(log_std).map(|(m, ls)| m + clamp_log_std(*ls).exp() * rng.sample::<f64, _>(StandardNormal)).collect(),
            ),
        };
        let lp = self.log_prob(&action).expect("sampled action is in support");
        (action, lp)
    }

    /// d log_prob(action) / d(params).
    pub fn log_prob_grad(&self, action: &Action) -> Result<DistGrad> {
        match (self, action) {
            (DistParams::Categorical { logits }, Action::Discrete(a)) => {
                if *a >= logits.len() {
                    return Err(Error::ActionOutOfRange { action: *a, n: logits.len() });
                }
                let mut g: Vec<f64> = softmax(logits).into_iter().map(|p| -p).collect();
                g[*a] += 1.0;
                Ok(DistGrad::Categorical { logits: g })
            }
            (DistParams::Gaussian { mean, log_std }, Action::Continuous(x)) => {
                if x.len() != mean.len() {
                    return Err(Error::ShapeMismatch { expected: mean.len(), actual: x.len() });
                }
                let mut gm = Vec::with_capacity(mean.len());
                let mut gs = Vec::with_capacity(mean.len());
                for ((m, ls), a) in mean.iter().zip(log_std).zip(x) {
                    let cl = clamp_log_std(*ls);
                    let var = (2.0 * cl).exp();
                    gm.push((a - m) / var);
                    let z2 = (a - m) * (a - m) / var;
                    gs.push(if log_std_in_range(*ls) { z2 - 1.0 } else { 0.0 });
                }
                Ok(DistGrad::Gaussian { mean: gm, log_std: gs })
            }
            _ => Err(Error::config("action kind does not match distribution")),
        }
    }

    /// d entropy / d(params).
    pub fn entropy_grad(&self) -> DistGrad {
        match self {
            DistParams::Categorical { logits } => {
                let lse = logsumexp(logits);
                let lps: Vec<f64> = logits.iter().map(|v| v - lse).collect();
                let h: f64 = lps.iter().map(|lp| -lp.exp() * lp).sum();
                DistGrad::Categorical { logits: lps.iter().map(|lp| -lp.exp() * (lp + h)).collect() }
            }
            DistParams::Gaussian { mean, log_std } => DistGrad::Gaussian {
                mean: vec![0.0; mean.len()],
                log_std: log_std.iter().map(|ls| if log_std_in_range(*ls) { 1.0 } else { 0.0 }).collect(),
            },
        }
    }
}
