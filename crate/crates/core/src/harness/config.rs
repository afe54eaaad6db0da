//! Experiment configuration files.
//!
//! Flat `key = value` lines; `#` starts a comment. Keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `env` | `cartpole`, `pendulum` or `chain` |
//! | `seeds` | comma-separated integers |
//! | `total_steps` | environment steps per run |
//! | `out` | output directory |
//! | `workers` | parallel runs (default 1) |
//! | `preset` | `general`: triangular, exp_range and fixed arms |
//! | `arm.<name>.kind` | `constant`, `triangular` or `exp_range` (defaults to `<name>` when that is a kind) |
//! | `arm.<name>.lr` | learning rate of a constant arm |
//! | `arm.<name>.eta_min`, `arm.<name>.eta_max` | cyclical bounds |
//! | `arm.<name>.stepsize` | half-cycle length in updates |
//! | `arm.<name>.decay` | exp_range decay factor |
//! | `arm.<name>.cycle_momentum` | `true`/`false` |
//! | `arm.<name>.m_min`, `arm.<name>.m_max` | momentum bounds when cycling |
//! | `arm.<name>.momentum` | fixed momentum when not cycling (default 0.9) |
//! | `ppo.<setting>` | any [`PpoConfig::set`] key |
//!
//! Later assignments win; command-line overrides are applied after the file.
//! `env` and `preset` are applied before everything else regardless of
//! position.

use std::path::{Path, PathBuf};

use crate::envs::EnvId;
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;
use crate::schedule::{MomentumCycle, PolicyKind, Schedule, SchedulePolicy};

pub const DEFAULT_FIXED_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub name: String,
    pub schedule: Schedule,
}

impl Arm {
    pub fn new(name: impl Into<String>, schedule: Schedule) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(Error::config(format!("arm name `{name}` must be non-empty [A-Za-z0-9_.-]")));
        }
        Ok(Arm { name, schedule })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvId,
    pub arms: Vec<Arm>,
    pub seeds: Vec<u64>,
    pub total_steps: u64,
    pub ppo: PpoConfig,
    pub out_dir: PathBuf,
    pub workers: usize,
}

/// General-purpose cyclical settings: bounds 1e-4..1e-2 over 2000-update
/// half cycles with momentum cycled between 0.8 and 1.0, plus a fixed 1e-3
/// baseline.
pub fn general_arms() -> Vec<Arm> {
    let cyc = MomentumCycle::cycling();
    vec![
        Arm::new("triangular", Schedule::new(SchedulePolicy::triangular(1e-4, 1e-2, 2000).unwrap(), cyc).unwrap()).unwrap(),
        Arm::new("exp_range", Schedule::new(SchedulePolicy::exp_range(1e-4, 1e-2, 2000, 0.99).unwrap(), cyc).unwrap()).unwrap(),
        Arm::new("fixed", Schedule::new(SchedulePolicy::constant(1e-3).unwrap(), MomentumCycle::fixed(DEFAULT_FIXED_MOMENTUM)).unwrap())
            .unwrap(),
    ]
}

impl ExperimentConfig {
    pub fn general(env: EnvId, seeds: Vec<u64>, total_steps: u64, out_dir: impl Into<PathBuf>) -> Result<Self> {
        let cfg = ExperimentConfig {
            env,
            arms: general_arms(),
            seeds,
            total_steps,
            ppo: PpoConfig::for_env(env),
            out_dir: out_dir.into(),
            workers: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return Err(Error::config("experiment needs at least one arm"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("experiment needs at least one seed"));
        }
        if self.total_steps == 0 {
            return Err(Error::config("total_steps must be > 0"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be >= 1"));
        }
        for (i, a) in self.arms.iter().enumerate() {
            if self.arms[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::config(format!("duplicate arm `{}`", a.name)));
            }
        }
        self.ppo.validate()
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path, overrides)
    }

    pub fn parse(text: &str, path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            entries.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        entries.extend(overrides.iter().map(|(k, v)| (0, k.trim().to_string(), v.trim().to_string())));
        let at = |line: usize, e: Error| -> Error {
            if line == 0 {
                e
            } else {
                Error::Parse { path: path.to_path_buf(), line, msg: e.to_string() }
            }
        };

        let mut env = None;
        let mut preset = false;
        for (line, k, v) in &entries {
            match k.as_str() {
                "env" => env = Some(v.parse::<EnvId>().map_err(|e| at(*line, e))?),
                "preset" => match v.as_str() {
                    "general" => preset = true,
                    "none" => preset = false,
                    other => return Err(at(*line, Error::config(format!("unknown preset `{other}`")))),
                },
                _ => {}
            }
        }
        let env = env.ok_or_else(|| Error::config("missing `env`"))?;
        let mut cfg = ExperimentConfig {
            env,
            arms: Vec::new(),
            seeds: Vec::new(),
            total_steps: 0,
            ppo: PpoConfig::for_env(env),
            out_dir: PathBuf::from("runs"),
            workers: 1,
        };
        let mut drafts: Vec<ArmDraft> = Vec::new();
        if preset {
            drafts.extend(general_arms().iter().map(ArmDraft::from_arm));
        }

        for (line, k, v) in &entries {
            let r: Result<()> = (|| {
                match k.as_str() {
                    "env" | "preset" => {}
                    "seeds" => {
                        cfg.seeds = v
                            .split(',')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(|s| s.parse().map_err(|_| Error::config(format!("bad seed `{s}`"))))
                            .collect::<Result<_>>()?
                    }
                    "total_steps" => cfg.total_steps = v.parse().map_err(|_| Error::config(format!("bad total_steps `{v}`")))?,
                    "out" => cfg.out_dir = PathBuf::from(v),
                    "workers" => cfg.workers = v.parse().map_err(|_| Error::config(format!("bad workers `{v}`")))?,
                    key => {
                        if let Some(rest) = key.strip_prefix("ppo.") {
                            cfg.ppo.set(rest, v)?;
                        } else if let Some(rest) = key.strip_prefix("arm.") {
                            let (name, field) =
                                rest.rsplit_once('.').ok_or_else(|| Error::config(format!("expected arm.<name>.<field>, got `{key}`")))?;
                            let idx = match drafts.iter().position(|d| d.name == name) {
                                Some(i) => i,
                                None => {
                                    drafts.push(ArmDraft::named(name));
                                    drafts.len() - 1
                                }
                            };
                            drafts[idx].set(field, v)?;
                        } else {
                            return Err(Error::config(format!("unknown key `{key}`")));
                        }
                    }
                }
                Ok(())
            })();
            r.map_err(|e| at(*line, e))?;
        }
        cfg.arms = drafts.into_iter().map(ArmDraft::build).collect::<Result<_>>()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
struct ArmDraft {
    name: String,
    kind: Option<PolicyKind>,
    lr: Option<f64>,
    eta_min: Option<f64>,
    eta_max: Option<f64>,
    stepsize: Option<u64>,
    decay: Option<f64>,
    cycle_momentum: Option<bool>,
    m_min: Option<f64>,
    m_max: Option<f64>,
    momentum: Option<f64>,
}

impl ArmDraft {
    fn named(name: &str) -> Self {
        ArmDraft {
            name: name.to_string(),
            kind: None,
            lr: None,
            eta_min: None,
            eta_max: None,
            stepsize: None,
            decay: None,
            cycle_momentum: None,
            m_min: None,
            m_max: None,
            momentum: None,
        }
    }

    fn from_arm(arm: &Arm) -> Self {
        let p = &arm.schedule.policy;
        let m = &arm.schedule.momentum;
        let mut d = ArmDraft::named(&arm.name);
        d.kind = Some(p.kind());
        match p.kind() {
            PolicyKind::Constant => d.lr = Some(p.eta_fixed()),
            _ => {
                d.eta_min = Some(p.eta_min_0());
                d.eta_max = Some(p.eta_max_0());
                d.stepsize = Some(p.stepsize());
                d.decay = Some(p.lambda());
            }
        }
        d.cycle_momentum = Some(m.enabled);
        if m.enabled {
            d.m_min = Some(m.m_min);
            d.m_max = Some(m.m_max);
        } else {
            d.momentum = Some(m.m_max);
        }
        d
    }

    fn set(&mut self, field: &str, v: &str) -> Result<()> {
        fn f(field: &str, v: &str) -> Result<f64> {
            v.parse().map_err(|_| Error::config(format!("bad value `{v}` for {field}")))
        }
        match field {
            "kind" => self.kind = Some(v.parse()?),
            "lr" => self.lr = Some(f(field, v)?),
            "eta_min" | "lr_min" => self.eta_min = Some(f(field, v)?),
            "eta_max" | "lr_max" => self.eta_max = Some(f(field, v)?),
            "stepsize" => self.stepsize = Some(v.parse().map_err(|_| Error::config(format!("bad stepsize `{v}`")))?),
            "decay" | "lambda" => self.decay = Some(f(field, v)?),
            "cycle_momentum" => self.cycle_momentum = Some(v.parse().map_err(|_| Error::config(format!("bad boolean `{v}`")))?),
            "m_min" => self.m_min = Some(f(field, v)?),
            "m_max" => self.m_max = Some(f(field, v)?),
            "momentum" => self.momentum = Some(f(field, v)?),
            other => return Err(Error::config(format!("unknown arm field `{other}`"))),
        }
        Ok(())
    }

    fn build(self) -> Result<Arm> {
        let kind = match self.kind {
            Some(k) => k,
            None => self.name.parse().map_err(|_| Error::config(format!("arm `{}` needs a kind", self.name)))?,
        };
        let need = |v: Option<f64>, what: &str| v.ok_or_else(|| Error::config(format!("arm `{}` is missing {what}", self.name)));
        let policy = match kind {
            PolicyKind::Constant => SchedulePolicy::constant(need(self.lr, "lr")?)?,
            PolicyKind::Triangular => {
                SchedulePolicy::triangular(need(self.eta_min, "eta_min")?, need(self.eta_max, "eta_max")?, self.stepsize.unwrap_or(2000))?
            }
            PolicyKind::ExpRange => SchedulePolicy::exp_range(
                need(self.eta_min, "eta_min")?,
                need(self.eta_max, "eta_max")?,
                self.stepsize.unwrap_or(2000),
                self.decay.unwrap_or(0.99),
            )?,
        };
        let momentum = if self.cycle_momentum.unwrap_or(false) {
            MomentumCycle::new(true, self.m_min.unwrap_or(0.8), self.m_max.unwrap_or(1.0))?
        } else {
            let m = self.momentum.unwrap_or(DEFAULT_FIXED_MOMENTUM);
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::config(format!("momentum must lie in [0, 1], got {m}")));
            }
            MomentumCycle::fixed(m)
        };
        Arm::new(self.name, Schedule::new(policy, momentum)?)
    }
}
