//! Returns, GAE and the clipped surrogate.

/// `G_t = r_{t+1} + gamma * G_{t+1}`, evaluated backwards.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Generalized advantage estimation over one stream.
///
/// `dones[t]` marks that the episode ended on step `t`, so neither the value
/// of the following state nor later advantages leak back across it.
/// `bootstrap` is the value of the state after the last step.
///
/// Returns `(advantages, returns)` with `returns = advantages + values`.
pub fn gae(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64, bootstrap: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n, "gae inputs must share a length");
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

/// Shifts to zero mean and scales to unit (population) standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len();
    if n == 0 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n as f64;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt() + 1e-8;
    adv.iter_mut().for_each(|a| *a = (*a - mean) / std);
}

/// True when the unclipped term is the one selected by the pessimistic min
/// (and therefore the one that carries gradient).
pub(crate) fn unclipped_active(ratio: f64, advantage: f64, clip_epsilon: f64) -> bool {
    let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
    ratio * advantage <= clipped * advantage
}

/// `mean(-min(r * A, clip(r, 1 - eps, 1 + eps) * A))`.
pub fn clipped_surrogate_loss(ratios: &[f64], advantages: &[f64], clip_epsilon: f64) -> f64 {
    assert_eq!(ratios.len(), advantages.len(), "ratios and advantages must share a length");
    if ratios.is_empty() {
        return 0.0;
    }
    let total: f64 = ratios
        .iter()
        .zip(advantages)
        .map(|(&r, &a)| {
            let clipped = r.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
            -(r * a).min(clipped * a)
        })
        .sum();
    total / ratios.len() as f64
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force expansion `A_t = sum_l (gamma lambda)^l delta_{t+l}`,
    /// truncated at the first episode end.
    pub(crate) fn gae_oracle(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64, bootstrap: f64) -> Vec<f64> {
        let n = rewards.len();
        let value_after = |t: usize| if t + 1 < n { values[t + 1] } else { bootstrap };
        let delta = |t: usize| {
            let next = if dones[t] { 0.0 } else { value_after(t) };
            rewards[t] + gamma * next - values[t]
        };
        (0..n)
            .map(|t| {
                let mut sum = 0.0;
                let mut weight = 1.0;
                for k in t..n {
                    sum += weight * delta(k);
                    if dones[k] {
                        break;
                    }
                    weight *= gamma * lambda;
                }
                sum
            })
            .collect()
    }

    #[test]
    fn undiscounted_suffix_sums() {
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 1.0), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn half_discount() {
        assert_eq!(discounted_return(&[1.0, 2.0, 4.0], 0.5)[0], 3.0);
    }

    #[test]
    fn zero_discount_is_identity() {
        let r = [0.3, -1.0, 7.0];
        assert_eq!(discounted_return(&r, 0.0), r.to_vec());
    }

    #[test]
    fn geometric_series() {
        for gamma in [0.0, 0.5, 0.9, 0.99] {
            for t in 1..60 {
                let g = discounted_return(&vec![1.0; t], gamma)[0];
                let want = (1.0 - f64::powi(gamma, t as i32)) / (1.0 - gamma);
                assert!((g - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gae_lambda_zero_is_td_error() {
        let r = [1.0, 0.5, -0.2, 2.0];
        let v = [0.3, 0.1, 0.7, -0.4];
        let d = [false, true, false, false];
        let (adv, ret) = gae(&r, &v, &d, 0.9, 0.0, 0.25);
        let deltas = [1.0 + 0.9 * 0.1 - 0.3, 0.5 - 0.1, -0.2 + 0.9 * -0.4 - 0.7, 2.0 + 0.9 * 0.25 + 0.4];
        for t in 0..4 {
            assert_eq!(adv[t], deltas[t]);
            assert_eq!(ret[t], adv[t] + v[t]);
        }
    }

    #[test]
    fn gae_monte_carlo_reduction() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let (adv, _) = gae(&r, &[0.0; 4], &[false; 4], 1.0, 1.0, 0.0);
        assert_eq!(adv, vec![10.0, 9.0, 7.0, 4.0]);
    }

    #[test]
    fn gae_matches_expansion_length_eight() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d: Vec<bool> = (0..8).map(|_| rng.random_bool(0.25)).collect();
        let (adv, _) = gae(&r, &v, &d, 0.99, 0.95, 0.4);
        for (a, b) in adv.iter().zip(gae_oracle(&r, &v, &d, 0.99, 0.95, 0.4)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn surrogate_examples() {
        let a = [0.5, -1.0, 2.0];
        assert_eq!(clipped_surrogate_loss(&[1.0; 3], &a, 0.2), -(0.5 - 1.0 + 2.0) / 3.0);
        assert!((clipped_surrogate_loss(&[2.0], &[1.0], 0.2) + 1.2).abs() < 1e-15);
        assert!((clipped_surrogate_loss(&[0.5], &[-1.0], 0.2) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalization_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2usize, 7, 64, 1024] {
            let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..80.0)).collect();
            normalize_advantages(&mut a);
            let mean = a.iter().sum::<f64>() / n as f64;
            let std = (a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64).sqrt();
            assert!(mean.abs() < 1e-8);
            assert!((std - 1.0).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn gae_equals_expansion(
            seq in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, prop::bool::weighted(0.2)), 1..=16),
            gamma in 0.0f64..=1.0,
            lambda in 0.0f64..=1.0,
            bootstrap in -5.0f64..5.0,
        ) {
            let r: Vec<f64> = seq.iter().map(|s| s.0).collect();
            let v: Vec<f64> = seq.iter().map(|s| s.1).collect();
            let d: Vec<bool> = seq.iter().map(|s| s.2).collect();
            let (adv, _) = gae(&r, &v, &d, gamma, lambda, bootstrap);
            for (a, b) in adv.iter().zip(gae_oracle(&r, &v, &d, gamma, lambda, bootstrap)) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn surrogate_ignores_old_logit_shift(
            logits in prop::collection::vec(-3.0f64..3.0, 2..6),
            new_logits in prop::collection::vec(-3.0f64..3.0, 2..6),
            shift in -100.0f64..100.0,
            adv in -2.0f64..2.0,
        ) {
            use crate::nn::{Action, DistParams};
            let n = logits.len().min(new_logits.len());
            let old = DistParams::categorical(logits[..n].to_vec());
            let shifted = DistParams::categorical(logits[..n].iter().map(|l| l + shift).collect());
            let new = DistParams::categorical(new_logits[..n].to_vec());
            for a in 0..n {
                let act = Action::Discrete(a);
                let lp = new.log_prob(&act).unwrap();
                let r1 = (lp - old.log_prob(&act).unwrap()).exp();
                let r2 = (lp - shifted.log_prob(&act).unwrap()).exp();
                let l1 = clipped_surrogate_loss(&[r1], &[adv], 0.2);
                let l2 = clipped_surrogate_loss(&[r2], &[adv], 0.2);
                // logsumexp is shift-equivariant only up to rounding of the shift itself.
                prop_assert!((l1 - l2).abs() <= 1e-12 * (1.0 + l1.abs()));
            }
        }
    }
}
