//! Step-indexed learning-rate and momentum schedules.
//!
//! A cycle spans `2 * stepsize` optimizer updates: the learning rate ramps
//! linearly from the lower bound to the upper bound over the first
//! `stepsize` updates and back down over the next `stepsize`. Momentum runs
//! the same waveform mirrored, so it bottoms out exactly where the learning
//! rate peaks.
//!
//! `exp_range` multiplies both bounds by the decay factor once per cycle.
//! Bounds are held constant inside a cycle.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Constant,
    Triangular,
    ExpRange,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Constant => "constant",
            PolicyKind::Triangular => "triangular",
            PolicyKind::ExpRange => "exp_range",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" | "fixed" => Ok(PolicyKind::Constant),
            "triangular" => Ok(PolicyKind::Triangular),
            "exp_range" | "exp-range" => Ok(PolicyKind::ExpRange),
            other => Err(Error::config(format!("unknown schedule kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Learning-rate policy. Construct through [`SchedulePolicy::constant`],
/// [`SchedulePolicy::triangular`] or [`SchedulePolicy::exp_range`], which
/// validate the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulePolicy {
    kind: PolicyKind,
    eta_fixed: f64,
    eta_min_0: f64,
    eta_max_0: f64,
    stepsize: u64,
    lambda: f64,
}

impl SchedulePolicy {
    pub fn constant(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::config(format!("constant learning rate must be finite and >= 0, got {eta}")));
        }
        Ok(SchedulePolicy { kind: PolicyKind::Constant, eta_fixed: eta, eta_min_0: eta, eta_max_0: eta, stepsize: 1, lambda: 1.0 })
    }

    pub fn triangular(eta_min: f64, eta_max: f64, stepsize: u64) -> Result<Self> {
        Self::cyclical(PolicyKind::Triangular, eta_min, eta_max, stepsize, 1.0)
    }

    pub fn exp_range(eta_min: f64, eta_max: f64, stepsize: u64, lambda: f64) -> Result<Self> {
        Self::cyclical(PolicyKind::ExpRange, eta_min, eta_max, stepsize, lambda)
    }

    fn cyclical(kind: PolicyKind, eta_min: f64, eta_max: f64, stepsize: u64, lambda: f64) -> Result<Self> {
        if !(eta_min.is_finite() && eta_max.is_finite() && eta_min > 0.0 && eta_min <= eta_max) {
            return Err(Error::config(format!("cyclical bounds need 0 < eta_min <= eta_max, got ({eta_min}, {eta_max})")));
        }
        if stepsize == 0 {
            return Err(Error::config("stepsize must be >= 1"));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::config(format!("decay factor must lie in (0, 1], got {lambda}")));
        }
        Ok(SchedulePolicy { kind, eta_fixed: eta_max, eta_min_0: eta_min, eta_max_0: eta_max, stepsize, lambda })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn eta_fixed(&self) -> f64 {
        self.eta_fixed
    }

    pub fn eta_min_0(&self) -> f64 {
        self.eta_min_0
    }

    pub fn eta_max_0(&self) -> f64 {
        self.eta_max_0
    }

    pub fn stepsize(&self) -> u64 {
        self.stepsize
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lr_at(&self, step: u64) -> f64 {
        lr_at(self, step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumCycle {
    pub enabled: bool,
    pub m_min: f64,
    pub m_max: f64,
}

impl Default for MomentumCycle {
    fn default() -> Self {
        MomentumCycle { enabled: false, m_min: 0.8, m_max: 1.0 }
    }
}

impl MomentumCycle {
    pub fn new(enabled: bool, m_min: f64, m_max: f64) -> Result<Self> {
        if !(0.0 <= m_min && m_min <= m_max && m_max <= 1.0) {
            return Err(Error::config(format!("momentum bounds need 0 <= m_min <= m_max <= 1, got ({m_min}, {m_max})")));
        }
        Ok(MomentumCycle { enabled, m_min, m_max })
    }

    /// Cycling between 0.8 and 1.0.
    pub fn cycling() -> Self {
        MomentumCycle { enabled: true, ..Default::default() }
    }

    pub fn disabled() -> Self {
        MomentumCycle::default()
    }

    /// No cycling; `momentum_at` reports `m` at every step.
    pub fn fixed(m: f64) -> Self {
        MomentumCycle { enabled: false, m_min: m, m_max: m }
    }
}

/// Zero-based cycle count; one cycle is `2 * stepsize` updates.
pub fn cycle_index(step: u64, stepsize: u64) -> u64 {
    debug_assert!(stepsize >= 1);
    step / (2 * stepsize)
}

/// Learning-rate bounds in effect during cycle `k_cycle`.
///
/// For `exp_range` the bounds are advanced one cycle at a time, each cycle's
/// bounds being the previous cycle's multiplied by the decay factor.
pub fn bounds_at_cycle(policy: &SchedulePolicy, k_cycle: u64) -> Result<(f64, f64)> {
    match policy.kind {
        PolicyKind::Constant => Err(Error::ConstantPolicy("bounds_at_cycle")),
        PolicyKind::Triangular => Ok((policy.eta_min_0, policy.eta_max_0)),
        PolicyKind::ExpRange => {
            let (mut lo, mut hi) = (policy.eta_min_0, policy.eta_max_0);
            for _ in 0..k_cycle {
                lo *= policy.lambda;
                hi *= policy.lambda;
            }
            Ok((lo, hi))
        }
    }
}

/// Position on the triangle wave in `[0, 1]`: 0 at a cycle start, 1 at the peak.
fn wave_position(step: u64, stepsize: u64) -> f64 {
    let phase = step % (2 * stepsize);
    let dist = if phase <= stepsize { phase } else { 2 * stepsize - phase };
    dist as f64 / stepsize as f64
}

fn interpolate(lo: f64, hi: f64, frac: f64) -> f64 {
    (lo * (1.0 - frac) + hi * frac).clamp(lo, hi)
}

pub fn lr_at(policy: &SchedulePolicy, step: u64) -> f64 {
    match policy.kind {
        PolicyKind::Constant => policy.eta_fixed,
        PolicyKind::Triangular | PolicyKind::ExpRange => {
            let k = cycle_index(step, policy.stepsize);
            let (lo, hi) = bounds_at_cycle(policy, k).expect("cyclical policy has bounds");
            interpolate(lo, hi, wave_position(step, policy.stepsize))
        }
    }
}

/// Momentum mirrored against the learning rate: `m_max` where the rate sits
/// at its lower bound and `m_min` where it peaks. Returns `m_max` when
/// cycling is disabled.
pub fn momentum_at(policy: &SchedulePolicy, cycle: &MomentumCycle, step: u64) -> Result<f64> {
    if !cycle.enabled {
        return Ok(cycle.m_max);
    }
    match policy.kind {
        PolicyKind::Constant => Err(Error::ConstantPolicy("momentum_at")),
        PolicyKind::Triangular | PolicyKind::ExpRange => {
            // Only the initial bounds are checked: exp_range decay may
            // eventually round them together, but the position stays defined.
            if policy.eta_min_0 == policy.eta_max_0 {
                return Err(Error::DegenerateBounds(policy.eta_min_0));
            }
            // The learning rate is linear in the wave position, so interpolating
            // momentum on the position is the same map as interpolating on the rate.
            let frac = wave_position(step, policy.stepsize);
            Ok((cycle.m_max * (1.0 - frac) + cycle.m_min * frac).clamp(cycle.m_min, cycle.m_max))
        }
    }
}

/// Schedule arm: a learning-rate policy plus its momentum treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub policy: SchedulePolicy,
    pub momentum: MomentumCycle,
}

impl Schedule {
    pub fn new(policy: SchedulePolicy, momentum: MomentumCycle) -> Result<Self> {
        if momentum.enabled {
            if policy.kind == PolicyKind::Constant {
                return Err(Error::ConstantPolicy("momentum cycling"));
            }
            if policy.eta_min_0 == policy.eta_max_0 {
                return Err(Error::DegenerateBounds(policy.eta_min_0));
            }
        }
        Ok(Schedule { policy, momentum })
    }

    /// `(lr, momentum)` for optimizer update `step`.
    pub fn at(&self, step: u64) -> (f64, f64) {
        let lr = lr_at(&self.policy, step);
        let m = momentum_at(&self.policy, &self.momentum, step).expect("validated in Schedule::new");
        (lr, m)
    }
}
