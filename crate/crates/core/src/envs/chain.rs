use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionSpace, Env, EnvSpec, Transition};
use crate::error::{Error, Result};
use crate::nn::Action;

const ROW_TOL: f64 = 1e-12;

/// Finite MDP with explicit transition and reward tables.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    n_states: usize,
    n_actions: usize,
    /// `p(s' | s, a)` at `[(s * n_actions + a) * n_states + s']`.
    transitions: Vec<f64>,
    /// `r(s, a)` at `[s * n_actions + a]`.
    rewards: Vec<f64>,
    initial: Vec<f64>,
    horizon: usize,
    spec: EnvSpec,
    state: usize,
    steps: usize,
    over: bool,
    rng: ChaCha8Rng,
}

/// States `s_0 .. s_T` and actions `a_0 .. a_{T-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

fn sums_to_one(row: &[f64]) -> bool {
    row.iter().all(|p| *p >= 0.0 && p.is_finite()) && (row.iter().sum::<f64>() - 1.0).abs() <= ROW_TOL
}

fn draw(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` just under 1: take the last state with mass.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

impl ChainMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        initial: Vec<f64>,
        horizon: usize,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || horizon == 0 {
            return Err(Error::config("chain MDP needs >= 1 state, action and step"));
        }
        if transitions.len() != n_states * n_actions * n_states {
            return Err(Error::ShapeMismatch { expected: n_states * n_actions * n_states, actual: transitions.len() });
        }
        if rewards.len() != n_states * n_actions {
            return Err(Error::ShapeMismatch { expected: n_states * n_actions, actual: rewards.len() });
        }
        if initial.len() != n_states {
            return Err(Error::ShapeMismatch { expected: n_states, actual: initial.len() });
        }
        if !transitions.chunks_exact(n_states).all(sums_to_one) {
            return Err(Error::config("every transition row p(.|s,a) must sum to 1"));
        }
        if !sums_to_one(&initial) {
            return Err(Error::config("initial-state distribution must sum to 1"));
        }
        if !rewards.iter().all(|r| r.is_finite()) {
            return Err(Error::config("rewards must be finite"));
        }
        let spec = EnvSpec {
            obs_dim: n_states,
            action_space: ActionSpace::Discrete(n_actions),
            max_episode_steps: horizon,
            reward_range: (
                rewards.iter().cloned().fold(f64::INFINITY, f64::min),
                rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ),
        };
        Ok(ChainMdp {
            n_states,
            n_actions,
            transitions,
            rewards,
            initial,
            horizon,
            spec,
            state: 0,
            steps: 0,
            over: true,
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    /// Linear chain: action 1 moves right with probability `1 - slip` (else
    /// stays), action 0 moves left. Reaching the last state pays 1 per step.
    pub fn slippery_chain(n_states: usize, slip: f64, horizon: usize) -> Self {
        let n = n_states.max(2);
        let mut t = vec![0.0; n * 2 * n];
        let mut r = vec![0.0; n * 2];
        for s in 0..n {
            let left = s.saturating_sub(1);
            t[(s * 2) * n + left] += 1.0;
            let right = (s + 1).min(n - 1);
            t[(s * 2 + 1) * n + right] += 1.0 - slip;
            t[(s * 2 + 1) * n + s] += slip;
            if s == n - 1 {
                r[s * 2] = 1.0;
                r[s * 2 + 1] = 1.0;
            }
        }
        let mut init = vec![0.0; n];
        init[0] = 1.0;
        ChainMdp::new(n, 2, t, r, init, horizon).expect("well-formed chain")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transitions[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_states];
        v[s] = 1.0;
        v
    }
}

impl Env for ChainMdp {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = draw(&self.initial, &mut self.rng);
        self.steps = 0;
        self.over = false;
        self.one_hot(self.state)
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        if self.over {
            return Err(Error::EpisodeOver);
        }
        let a = match action {
            Action::Discrete(a) if *a < self.n_actions => *a,
            Action::Discrete(a) => return Err(Error::ActionOutOfRange { action: *a, n: self.n_actions }),
            Action::Continuous(_) => return Err(Error::config("chain MDP takes a discrete action")),
        };
        let s = self.state;
        let reward = self.reward(s, a);
        let base = (s * self.n_actions + a) * self.n_states;
        let row = self.transitions[base..base + self.n_states].to_vec();
        self.state = draw(&row, &mut self.rng);
        self.steps += 1;
        let truncated = self.steps >= self.horizon;
        self.over = truncated;
        Ok(Transition { observation: self.one_hot(self.state), reward, done: false, truncated })
    }
}

/// `rho0(s_0) * prod_t p(s_{t+1} | s_t, a_t) * pi(a_t | s_t)`.
///
/// `policy[s][a]` is the action distribution in state `s`.
pub fn trajectory_probability(mdp: &ChainMdp, policy: &[Vec<f64>], traj: &Trajectory) -> Result<f64> {
    let bad = |m: String| Err(Error::MalformedTrajectory(m));
    if policy.len() != mdp.n_states {
        return bad(format!("policy has {} rows, MDP has {} states", policy.len(), mdp.n_states));
    }
    if let Some(s) = policy.iter().position(|row| row.len() != mdp.n_actions || !sums_to_one(row)) {
        return bad(format!("policy row {s} is not a distribution over {} actions", mdp.n_actions));
    }
    if traj.states.len() != traj.actions.len() + 1 {
        return bad(format!("{} states for {} actions", traj.states.len(), traj.actions.len()));
    }
    if let Some(s) = traj.states.iter().find(|&&s| s >= mdp.n_states) {
        return bad(format!("state {s} out of range"));
    }
    if let Some(a) = traj.actions.iter().find(|&&a| a >= mdp.n_actions) {
        return bad(format!("action {a} out of range"));
    }
    let mut p = mdp.initial[traj.states[0]];
    for (t, &a) in traj.actions.iter().enumerate() {
        let (s, next) = (traj.states[t], traj.states[t + 1]);
        p *= mdp.transition_prob(s, a, next) * policy[s][a];
    }
    Ok(p)
}
