//! Learning-rate range test: train with a linearly increasing learning rate
//! and record the loss of every update.

use std::fmt::Write as _;
use std::path::Path;

use super::config::DEFAULT_FIXED_MOMENTUM;
use super::write_atomic;
use crate::envs::EnvId;
use crate::error::{Error, Result};
use crate::ppo::{PpoConfig, Trainer};

/// Loss above this multiple of the first update's loss counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 4.0;

pub const LRFIND_HEADER: &str = "update_index,lr,total_loss";

#[derive(Debug, Clone, PartialEq)]
pub struct LrFindPoint {
    pub update_index: u64,
    pub lr: f64,
    pub total_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrFindResult {
    pub env: String,
    pub seed: u64,
    pub points: Vec<LrFindPoint>,
    pub diverged: bool,
    pub reason: Option<String>,
}

/// Learning rate for update `i` of `n`: `start` at 0, `end` at `n - 1`.
pub fn sweep_lr(eta_start: f64, eta_end: f64, i: u64, n: u64) -> f64 {
    let f = i as f64 / (n - 1) as f64;
    eta_start * (1.0 - f) + eta_end * f
}

pub fn lr_find(env: EnvId, eta_start: f64, eta_end: f64, n_updates: u64, seed: u64, config: &PpoConfig) -> Result<LrFindResult> {
    if !(eta_start > 0.0 && eta_start.is_finite() && eta_end.is_finite() && eta_start < eta_end) {
        return Err(Error::config(format!("need 0 < lr_start < lr_end, got ({eta_start}, {eta_end})")));
    }
    if n_updates < 2 {
        return Err(Error::config("lr-find needs at least 2 updates"));
    }
    let mut trainer = Trainer::new(env, config.clone(), seed)?;
    let mut res = LrFindResult { env: env.to_string(), seed, points: Vec::new(), diverged: false, reason: None };
    let mut initial: Option<f64> = None;
    for i in 0..n_updates {
        let lr = sweep_lr(eta_start, eta_end, i, n_updates);
        let mut buffer = trainer.collect_rollout(|_, _| {})?;
        let loss = match trainer.update(&mut buffer, lr, DEFAULT_FIXED_MOMENTUM) {
            Ok(m) => m.total_loss,
            Err(Error::Diverged(r)) => {
                res.diverged = true;
                res.reason = Some(format!("update {i} at lr {lr}: {r}"));
                break;
            }
            Err(e) => return Err(e),
        };
        res.points.push(LrFindPoint { update_index: i, lr, total_loss: loss });
        let first = *initial.get_or_insert(loss);
        if !loss.is_finite() || loss > DIVERGENCE_FACTOR * first.abs() {
            res.diverged = true;
            res.reason = Some(format!("update {i} at lr {lr}: loss {loss} vs initial {first}"));
            break;
        }
    }
    Ok(res)
}

impl LrFindResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# env={}", self.env).unwrap();
        writeln!(out, "# seed={}", self.seed).unwrap();
        writeln!(out, "# diverged={}", self.diverged).unwrap();
        if let Some(r) = &self.reason {
            writeln!(out, "# reason={}", r.replace('\n', " ")).unwrap();
        }
        writeln!(out, "{LRFIND_HEADER}").unwrap();
        for p in &self.points {
            writeln!(out, "{},{:?},{:?}", p.update_index, p.lr, p.total_loss).unwrap();
        }
        out
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
        let mut res = LrFindResult { env: String::new(), seed: 0, points: Vec::new(), diverged: false, reason: None };
        let mut saw_header = false;
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(m) = line.strip_prefix('#') {
                match m.trim_start().split_once('=') {
                    Some(("env", v)) => res.env = v.to_string(),
                    Some(("seed", v)) => res.seed = v.parse().map_err(|_| err(ln, format!("bad seed `{v}`")))?,
                    Some(("diverged", v)) => res.diverged = v == "true",
                    Some(("reason", v)) => res.reason = Some(v.to_string()),
                    _ => {}
                }
                continue;
            }
            if !saw_header {
                if line != LRFIND_HEADER {
                    return Err(err(ln, format!("expected header `{LRFIND_HEADER}`")));
                }
                saw_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(err(ln, format!("expected 3 fields, found {}", f.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| err(ln, format!("`{s}`: {e}")));
            res.points.push(LrFindPoint {
                update_index: f[0].trim().parse().map_err(|e| err(ln, format!("`{}`: {e}", f[0])))?,
                lr: num(f[1])?,
                total_loss: num(f[2])?,
            });
        }
        if !saw_header {
            return Err(err(0, "missing CSV header".into()));
        }
        Ok(res)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    /// Learning rate at which the loss fell the most between consecutive
    /// updates.
    pub fn steepest_descent_lr(&self) -> Option<f64> {
        self.points
            .windows(2)
            .map(|w| (w[1].total_loss - w[0].total_loss, w[1].lr))
            .filter(|(d, _)| d.is_finite())
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, lr)| lr)
    }
}
