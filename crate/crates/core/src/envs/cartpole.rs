use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionSpace, Env, EnvSpec, Transition};
use crate::error::{Error, Result};
use crate::nn::Action;

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
/// Half the pole's length.
const LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const X_THRESHOLD: f64 = 2.4;
pub const MAX_STEPS: usize = 200;

/// Cart-pole balancing with Euler integration, 200-step episodes.
/// Action 1 pushes right, 0 pushes left; +1 reward per step survived,
/// including the step that ends the episode.
#[derive(Debug, Clone)]
pub struct CartPole {
    spec: EnvSpec,
    state: [f64; 4],
    steps: usize,
    over: bool,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        CartPole {
            spec: EnvSpec { obs_dim: 4, action_space: ActionSpace::Discrete(2), max_episode_steps: MAX_STEPS, reward_range: (0.0, 1.0) },
            state: [0.0; 4],
            steps: 0,
            // Must be reset before the first step.
            over: true,
        }
    }

    pub fn state(&self) -> [f64; 4] {
        self.state
    }

    /// Places the system in an arbitrary state at the start of an episode.
    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.steps = 0;
        self.over = false;
    }
}

impl Env for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = [0.0; 4];
        for v in &mut s {
            *v = rng.random_range(-0.05..0.05);
        }
        self.set_state(s);
        s.to_vec()
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        if self.over {
            return Err(Error::EpisodeOver);
        }
        let force = match action {
            Action::Discrete(1) => FORCE_MAG,
            Action::Discrete(0) => -FORCE_MAG,
            Action::Discrete(a) => return Err(Error::ActionOutOfRange { action: *a, n: 2 }),
            Action::Continuous(_) => return Err(Error::config("cartpole takes a discrete action")),
        };
        let [x, x_dot, theta, theta_dot] = self.state;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin - cos * temp) / (LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;

        self.state = [x + TAU * x_dot, x_dot + TAU * x_acc, theta + TAU * theta_dot, theta_dot + TAU * theta_acc];
        self.steps += 1;

        let done = self.state[0].abs() > X_THRESHOLD || self.state[2].abs() > THETA_THRESHOLD;
        let truncated = !done && self.steps >= MAX_STEPS;
        self.over = done || truncated;
        Ok(Transition { observation: self.state.to_vec(), reward: 1.0, done, truncated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_seeded_and_small() {
        let mut env = CartPole::new();
        let a = env.reset(17);
        let b = env.reset(17);
        assert_eq!(a, b);
        for seed in 0..200 {
            assert!(env.reset(seed).iter().all(|v| v.abs() < 0.05));
        }
        assert_ne!(env.reset(1), env.reset(2));
    }

    #[test]
    fn one_euler_step_from_rest() {
        // At the zero state sin = 0, cos = 1: temp = F / M,
        // theta_acc = -temp / (l * (4/3 - m_p / M)), x_acc = temp - m_p l theta_acc / M.
        let mut env = CartPole::new();
        env.set_state([0.0; 4]);
        let t = env.step(&Action::Discrete(1)).unwrap();
        let temp = 10.0 / 1.1;
        let theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
        let x_acc = temp - 0.05 * theta_acc / 1.1;
        let want = [0.0, 0.02 * x_acc, 0.0, 0.02 * theta_acc];
        for (g, w) in t.observation.iter().zip(want) {
            assert!((g - w).abs() < 1e-10, "{g} vs {w}");
        }
        assert_eq!(t.reward, 1.0);
        assert!(!t.done && !t.truncated);
    }

    #[test]
    fn terminates_past_twelve_degrees_with_reward() {
        let mut env = CartPole::new();
        // theta lands just past the threshold after one Euler step of theta_dot.
        env.set_state([0.0, 0.0, THETA_THRESHOLD - 1e-4, 0.01]);
        let t = env.step(&Action::Discrete(1)).unwrap();
        assert!(t.observation[2] > THETA_THRESHOLD);
        assert!(t.done);
        assert_eq!(t.reward, 1.0);
        assert!(matches!(env.step(&Action::Discrete(0)), Err(Error::EpisodeOver)));
    }

    #[test]
    fn truncates_at_two_hundred() {
        let mut env = CartPole::new();
        env.reset(3);
        // Balance with a simple bang-bang controller so the pole stays up.
        let mut n = 0;
        loop {
            let s = env.state();
            let a = if s[2] + 0.5 * s[3] + 0.01 * s[0] + 0.1 * s[1] > 0.0 { 1 } else { 0 };
            let t = env.step(&Action::Discrete(a)).unwrap();
            n += 1;
            if t.episode_over() {
                assert!(t.truncated && !t.done, "fell after {n}");
                break;
            }
        }
        assert_eq!(n, MAX_STEPS);
    }

    #[test]
    fn rejects_bad_actions() {
        let mut env = CartPole::new();
        assert!(matches!(env.step(&Action::Discrete(0)), Err(Error::EpisodeOver)));
        env.reset(0);
        assert!(env.step(&Action::Discrete(2)).is_err());
        assert!(env.step(&Action::Continuous(vec![0.0])).is_err());
    }
}
