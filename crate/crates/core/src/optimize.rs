//! Parameter update rules. Learning rate and momentum are arguments of every
//! step; nothing here stores them.

use crate::error::{Error, Result};

pub const DEFAULT_BETA1_CEILING: f64 = 0.999;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-5;

fn check_shapes(params: &[f64], grads: &[f64], state_len: usize) -> Result<()> {
    if grads.len() != params.len() {
        return Err(Error::ShapeMismatch { expected: params.len(), actual: grads.len() });
    }
    if state_len != params.len() {
        return Err(Error::ShapeMismatch { expected: state_len, actual: params.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub t: u64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Scheduled momentum above this value is clamped before use as beta1.
    pub beta1_ceiling: f64,
    /// Running product of every beta1 used so far; `1 - beta1_product` is the
    /// first-moment bias correction, which reduces to `1 - beta1^t` when beta1
    /// is held fixed.
    pub beta1_product: f64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self::with_hyper(n_params, DEFAULT_BETA2, DEFAULT_EPSILON, DEFAULT_BETA1_CEILING)
    }

    pub fn with_hyper(n_params: usize, beta2: f64, epsilon: f64, beta1_ceiling: f64) -> Self {
        AdamState {
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            t: 0,
            beta2,
            epsilon,
            beta1_ceiling,
            beta1_product: 1.0,
        }
    }

    pub fn effective_beta1(&self, momentum: f64) -> f64 {
        momentum.clamp(0.0, self.beta1_ceiling)
    }
}

/// One Adam update. Pure: returns the new parameters and state.
pub fn adam_step(state: &AdamState, params: &[f64], grads: &[f64], lr: f64, beta1: f64) -> Result<(Vec<f64>, AdamState)> {
    let mut next_state = state.clone();
    let mut next_params = params.to_vec();
    adam_step_in_place(&mut next_state, &mut next_params, grads, lr, beta1)?;
    Ok((next_params, next_state))
}

pub(crate) fn adam_step_in_place(state: &mut AdamState, params: &mut [f64], grads: &[f64], lr: f64, beta1: f64) -> Result<()> {
    check_shapes(params, grads, state.first_moment.len())?;
    let beta1 = state.effective_beta1(beta1);
    let beta2 = state.beta2;
    state.t += 1;
    state.beta1_product *= beta1;
    let bc1 = 1.0 - state.beta1_product;
    let bc2 = 1.0 - beta2.powi(state.t.min(i32::MAX as u64) as i32);
    for i in 0..params.len() {
        let g = grads[i];
        let m = beta1 * state.first_moment[i] + (1.0 - beta1) * g;
        let v = beta2 * state.second_moment[i] + (1.0 - beta2) * g * g;
        state.first_moment[i] = m;
        state.second_moment[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdMomentumState {
    pub velocity: Vec<f64>,
}

impl SgdMomentumState {
    pub fn new(n_params: usize) -> Self {
        SgdMomentumState { velocity: vec![0.0; n_params] }
    }
}

/// `velocity <- mu * velocity + grads; params <- params - lr * velocity`.
pub fn sgd_momentum_step(
    state: &SgdMomentumState,
    params: &[f64],
    grads: &[f64],
    lr: f64,
    mu: f64,
) -> Result<(Vec<f64>, SgdMomentumState)> {
    let mut next_state = state.clone();
    let mut next_params = params.to_vec();
    sgd_momentum_step_in_place(&mut next_state, &mut next_params, grads, lr, mu)?;
    Ok((next_params, next_state))
}

pub(crate) fn sgd_momentum_step_in_place(state: &mut SgdMomentumState, params: &mut [f64], grads: &[f64], lr: f64, mu: f64) -> Result<()> {
    check_shapes(params, grads, state.velocity.len())?;
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::config(format!("sgd momentum must lie in [0, 1), got {mu}")));
    }
    for ((p, v), &g) in params.iter_mut().zip(state.velocity.iter_mut()).zip(grads) {
        *v = mu * *v + g;
        *p -= lr * *v;
    }
    Ok(())
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescales `grads` to norm `max_norm` when its L2 norm exceeds it.
pub fn clip_global_norm(grads: &[f64], max_norm: f64) -> Vec<f64> {
    let mut out = grads.to_vec();
    clip_global_norm_in_place(&mut out, max_norm);
    out
}

/// In-place variant; returns the norm before clipping.
pub fn clip_global_norm_in_place(grads: &mut [f64], max_norm: f64) -> f64 {
    debug_assert!(max_norm > 0.0);
    let norm = l2_norm(grads);
    if norm > max_norm {
        let scale = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    /// Scheduled momentum drives Adam's beta1.
    Adam,
    /// Scheduled momentum drives the SGD velocity decay.
    SgdMomentum,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" | "sgd_momentum" => Ok(OptimizerKind::SgdMomentum),
            other => Err(Error::config(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub beta2: f64,
    pub epsilon: f64,
    /// Upper clamp on scheduled momentum for both optimizers.
    pub momentum_ceiling: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            momentum_ceiling: DEFAULT_BETA1_CEILING,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::config(format!("beta2 must lie in (0, 1), got {}", self.beta2)));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::config("epsilon must be positive"));
        }
        if !(self.momentum_ceiling >= 0.0 && self.momentum_ceiling < 1.0) {
            return Err(Error::config(format!("momentum ceiling must lie in [0, 1), got {}", self.momentum_ceiling)));
        }
        Ok(())
    }
}

/// Optimizer state for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Adam(AdamState),
    Sgd { state: SgdMomentumState, momentum_ceiling: f64 },
}

impl OptimizerState {
    pub fn new(config: &OptimizerConfig, n_params: usize) -> Self {
        match config.kind {
            OptimizerKind::Adam => {
                OptimizerState::Adam(AdamState::with_hyper(n_params, config.beta2, config.epsilon, config.momentum_ceiling))
            }
            OptimizerKind::SgdMomentum => {
                OptimizerState::Sgd { state: SgdMomentumState::new(n_params), momentum_ceiling: config.momentum_ceiling }
            }
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, momentum: f64) -> Result<()> {
        match self {
            OptimizerState::Adam(s) => adam_step_in_place(s, params, grads, lr, momentum),
            OptimizerState::Sgd { state, momentum_ceiling } => {
                sgd_momentum_step_in_place(state, params, grads, lr, momentum.clamp(0.0, *momentum_ceiling))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn adam_zero_gradient_is_fixed_point() {
        let s = AdamState::new(3);
        let p = vec![0.5, -1.0, 2.0];
        let (p2, s2) = adam_step(&s, &p, &[0.0; 3], 0.01, 0.9).unwrap();
        assert_eq!(p2, p);
        assert_eq!(s2.first_moment, vec![0.0; 3]);
        assert_eq!(s2.second_moment, vec![0.0; 3]);
        assert_eq!(s2.t, 1);
        // Inputs untouched.
        assert_eq!(s.t, 0);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
        let (p, _) = adam_step(&AdamState::new(1), &[0.0], &[1.0], 0.01, 0.9).unwrap();
        assert!((p[0] + 0.01).abs() <= 1e-6, "{}", p[0]);
        assert!((p[0] + 0.01 / (1.0 + 1e-5)).abs() < 1e-15);
    }

    #[test]
    fn adam_moments_decay_geometrically() {
        let (b1, b2) = (0.9, DEFAULT_BETA2);
        let (p, s1) = adam_step(&AdamState::new(1), &[0.0], &[2.0], 0.01, b1).unwrap();
        let (p, s2) = adam_step(&s1, &p, &[0.0], 0.01, b1).unwrap();
        let (_, s3) = adam_step(&s2, &p, &[0.0], 0.01, b1).unwrap();
        let m1 = (1.0 - b1) * 2.0;
        let v1 = (1.0 - b2) * 4.0;
        assert_eq!(s1.first_moment[0], m1);
        assert_eq!(s1.second_moment[0], v1);
        assert!((s3.first_moment[0] - m1 * b1 * b1).abs() < 1e-15);
        assert!((s3.second_moment[0] - v1 * b2 * b2).abs() < 1e-15);
        assert!((s3.first_moment[0] / s2.first_moment[0] - b1).abs() < 1e-12);
        assert!((s3.second_moment[0] / s2.second_moment[0] - b2).abs() < 1e-12);
    }

    #[test]
    fn adam_clamps_beta1_at_ceiling() {
        let s = AdamState::new(1);
        let (_, a) = adam_step(&s, &[0.0], &[1.0], 0.01, 1.0).unwrap();
        let (_, b) = adam_step(&s, &[0.0], &[1.0], 0.01, DEFAULT_BETA1_CEILING).unwrap();
        assert_eq!(a, b);
        assert!(a.beta1_product < 1.0);
    }

    #[test]
    fn adam_shape_mismatch() {
        let s = AdamState::new(2);
        assert!(matches!(adam_step(&s, &[0.0, 0.0], &[1.0], 0.1, 0.9), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(adam_step(&s, &[0.0], &[1.0], 0.1, 0.9), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn adam_step_scales_linearly_with_lr() {
        let s = AdamState::new(3);
        let p = [0.0; 3];
        let g = [0.3, -2.0, 5.0];
        let (a, _) = adam_step(&s, &p, &g, 0.001, 0.9).unwrap();
        let (b, _) = adam_step(&s, &p, &g, 0.002, 0.9).unwrap();
        let (c, _) = adam_step(&s, &p, &g, 0.0005, 0.9).unwrap();
        for i in 0..3 {
            assert_eq!(b[i], 2.0 * a[i]);
            assert_eq!(c[i], 0.5 * a[i]);
        }
    }

    #[test]
    fn sgd_without_momentum_is_plain_gradient_step() {
        let (p, _) = sgd_momentum_step(&SgdMomentumState::new(2), &[1.0, 2.0], &[0.5, -1.0], 0.1, 0.0).unwrap();
        assert_eq!(p, vec![1.0 - 0.1 * 0.5, 2.0 + 0.1]);
    }

    #[test]
    fn sgd_zero_gradient_zero_velocity() {
        let (p, s) = sgd_momentum_step(&SgdMomentumState::new(2), &[1.0, 2.0], &[0.0, 0.0], 0.1, 0.9).unwrap();
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(s.velocity, vec![0.0, 0.0]);
    }

    #[test]
    fn sgd_velocity_unrolls() {
        // v1 = 1, v2 = 0.5 + 1 = 1.5; displacement 1 + 1.5.
        let (p, s) = sgd_momentum_step(&SgdMomentumState::new(1), &[0.0], &[1.0], 1.0, 0.5).unwrap();
        let (p, _) = sgd_momentum_step(&s, &p, &[1.0], 1.0, 0.5).unwrap();
        assert_eq!(p[0], -2.5);
    }

    #[test]
    fn sgd_rejects_bad_input() {
        let s = SgdMomentumState::new(1);
        assert!(sgd_momentum_step(&s, &[0.0], &[1.0, 2.0], 1.0, 0.5).is_err());
        assert!(sgd_momentum_step(&s, &[0.0], &[1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn optimizer_state_clamps_sgd_momentum() {
        let cfg = OptimizerConfig { kind: OptimizerKind::SgdMomentum, ..Default::default() };
        let mut st = OptimizerState::new(&cfg, 1);
        let mut p = vec![0.0];
        st.step(&mut p, &[1.0], 0.1, 1.0).unwrap();
        st.step(&mut p, &[1.0], 0.1, 1.0).unwrap();
        assert!((p[0] + 0.1 * (1.0 + 1.999)).abs() < 1e-12);
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_global_norm(&[0.3, 0.4], 1.0), vec![0.3, 0.4]);
        let c = clip_global_norm(&[3.0, 4.0], 1.0);
        assert!((c[0] - 0.6).abs() < 1e-15 && (c[1] - 0.8).abs() < 1e-15);
        assert_eq!(clip_global_norm(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn clipped_norm_bounded(g in prop::collection::vec(-1e6f64..1e6, 0..40), max in 1e-3f64..1e3) {
            prop_assert!(l2_norm(&clip_global_norm(&g, max)) <= max + 1e-12);
        }

        #[test]
        fn adam_deterministic(g in prop::collection::vec(-10f64..10.0, 1..10), lr in 1e-5f64..1e-1, b1 in 0.0f64..1.0) {
            let s = AdamState::new(g.len());
            let p = vec![0.25; g.len()];
            let (a, sa) = adam_step(&s, &p, &g, lr, b1).unwrap();
            let (b, sb) = adam_step(&s, &p, &g, lr, b1).unwrap();
            prop_assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(sa, sb);
        }

        #[test]
        fn adam_zero_grads_never_move(n in 1usize..20, steps in 1usize..20) {
            let mut s = AdamState::new(n);
            let mut p: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
            let p0 = p.clone();
            for _ in 0..steps {
                let (np, ns) = adam_step(&s, &p, &vec![0.0; n], 0.1, 0.9).unwrap();
                p = np; s = ns;
            }
            prop_assert_eq!(p, p0);
        }
    }
}
