use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionSpace, Env, EnvSpec, Transition};
use crate::error::{Error, Result};
use crate::nn::Action;

const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;
const DT: f64 = 0.05;
const G: f64 = 10.0;
const M: f64 = 1.0;
const L: f64 = 1.0;
pub const MAX_STEPS: usize = 200;

/// Wraps an angle into `[-pi, pi)`.
pub fn angle_normalize(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Torque-controlled pendulum swing-up. Observation is
/// `(cos theta, sin theta, theta_dot)`; episodes never terminate early and
/// are truncated at 200 steps.
#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    steps: usize,
    over: bool,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

impl Pendulum {
    pub fn new() -> Self {
        let max_cost = PI * PI + 0.1 * MAX_SPEED * MAX_SPEED + 0.001 * MAX_TORQUE * MAX_TORQUE;
        Pendulum {
            spec: EnvSpec {
                obs_dim: 3,
                action_space: ActionSpace::Box { low: vec![-MAX_TORQUE], high: vec![MAX_TORQUE] },
                max_episode_steps: MAX_STEPS,
                reward_range: (-max_cost, 0.0),
            },
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
            over: true,
        }
    }

    pub fn state(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    pub fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.steps = 0;
        self.over = false;
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = rng.random_range(-PI..=PI);
        let theta_dot = rng.random_range(-1.0..=1.0);
        self.set_state(theta, theta_dot);
        self.observation()
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        if self.over {
            return Err(Error::EpisodeOver);
        }
        let u = match action {
            Action::Continuous(v) if v.len() == 1 => v[0],
            Action::Continuous(v) => return Err(Error::ShapeMismatch { expected: 1, actual: v.len() }),
            Action::Discrete(_) => return Err(Error::config("pendulum takes a continuous action")),
        };
        if !u.is_finite() {
            return Err(Error::config("pendulum torque must be finite"));
        }
        let u = u.clamp(-MAX_TORQUE, MAX_TORQUE);
        let (th, thdot) = (self.theta, self.theta_dot);
        let th_n = angle_normalize(th);
        let cost = th_n * th_n + 0.1 * thdot * thdot + 0.001 * u * u;

        let new_thdot = thdot + (-3.0 * G / (2.0 * L) * (th + PI).sin() + 3.0 / (M * L * L) * u) * DT;
        self.theta = th + new_thdot * DT;
        self.theta_dot = new_thdot.clamp(-MAX_SPEED, MAX_SPEED);
        self.steps += 1;

        let truncated = self.steps >= MAX_STEPS;
        self.over = truncated;
        Ok(Transition { observation: self.observation(), reward: -cost, done: false, truncated })
    }
}
