//! Run logs and their CSV form.
//!
//! ```text
//! # run_id=triangular-1
//! # arm=triangular
//! # env=cartpole
//! # seed=1
//! # diverged=false
//! env_step,update_index,episode_reward,lr,momentum,policy_loss,value_loss,entropy,approx_kl
//! 23,0,23,0.0001,1,,,,
//! 1024,0,,0.0001,1,-0.0012,41.7,0.69,0.0003
//! ```
//!
//! Optional columns are left empty. Floats are written in shortest
//! round-trip form, so parsing a written log gives back the same values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ppo::UpdateMetrics;

pub const CSV_HEADER: &str = "env_step,update_index,episode_reward,lr,momentum,policy_loss,value_loss,entropy,approx_kl";

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub env_step: u64,
    pub update_index: u64,
    pub episode_reward: Option<f64>,
    pub lr: f64,
    pub momentum: f64,
    pub policy_loss: Option<f64>,
    pub value_loss: Option<f64>,
    pub entropy: Option<f64>,
    pub approx_kl: Option<f64>,
}

impl LogRow {
    pub fn episode(env_step: u64, update_index: u64, reward: f64, lr: f64, momentum: f64) -> Self {
        LogRow {
            env_step,
            update_index,
            episode_reward: Some(reward),
            lr,
            momentum,
            policy_loss: None,
            value_loss: None,
            entropy: None,
            approx_kl: None,
        }
    }

    pub fn is_update(&self) -> bool {
        self.policy_loss.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub run_id: String,
    pub arm: String,
    pub env: String,
    pub seed: u64,
    pub diverged: bool,
    pub divergence_reason: Option<String>,
    pub rows: Vec<LogRow>,
}

fn fmt_f64(out: &mut String, v: f64) {
    write!(out, "{v:?}").unwrap();
}

fn fmt_opt(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        fmt_f64(out, v);
    }
}

/// Metadata values are single-line.
fn clean(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

impl RunLog {
    pub fn new(run_id: impl Into<String>, arm: impl Into<String>, env: impl Into<String>, seed: u64) -> Self {
        RunLog { run_id: run_id.into(), arm: arm.into(), env: env.into(), seed, diverged: false, divergence_reason: None, rows: Vec::new() }
    }

    pub fn mark_diverged(&mut self, reason: impl Into<String>) {
        self.diverged = true;
        self.divergence_reason = Some(reason.into());
    }

    /// Adds an update row, merging into the last row if an episode ended on
    /// the same environment step.
    pub fn record_update(&mut self, env_step: u64, update_index: u64, lr: f64, momentum: f64, m: &UpdateMetrics) {
        let fill = |row: &mut LogRow| {
            row.policy_loss = Some(m.policy_loss);
            row.value_loss = Some(m.value_loss);
            row.entropy = Some(m.entropy);
            row.approx_kl = Some(m.approx_kl);
        };
        match self.rows.last_mut() {
            Some(last) if last.env_step == env_step && !last.is_update() => fill(last),
            _ => {
                let mut row = LogRow::episode(env_step, update_index, 0.0, lr, momentum);
                row.episode_reward = None;
                fill(&mut row);
                self.rows.push(row);
            }
        }
    }

    pub fn episode_rewards(&self) -> Vec<(u64, f64)> {
        self.rows.iter().filter_map(|r| r.episode_reward.map(|e| (r.env_step, e))).collect()
    }

    pub fn n_updates(&self) -> usize {
        self.rows.iter().filter(|r| r.is_update()).count()
    }

    /// First environment step at which the trailing `window`-episode mean
    /// reward reaches `threshold`.
    pub fn solved_at(&self, window: usize, threshold: f64) -> Option<u64> {
        let eps = self.episode_rewards();
        if window == 0 || eps.len() < window {
            return None;
        }
        let mut sum: f64 = eps[..window].iter().map(|e| e.1).sum();
        for i in window..=eps.len() {
            if i > window {
                sum += eps[i - 1].1 - eps[i - 1 - window].1;
            }
            if sum / window as f64 >= threshold {
                return Some(eps[i - 1].0);
            }
        }
        None
    }

    /// CSV data rows only (header and metadata excluded).
    pub fn data_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            write!(out, "{},{},", r.env_step, r.update_index).unwrap();
            fmt_opt(&mut out, r.episode_reward);
            out.push(',');
            fmt_f64(&mut out, r.lr);
            out.push(',');
            fmt_f64(&mut out, r.momentum);
            for v in [r.policy_loss, r.value_loss, r.entropy, r.approx_kl] {
                out.push(',');
                fmt_opt(&mut out, v);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# run_id={}", clean(&self.run_id)).unwrap();
        writeln!(out, "# arm={}", clean(&self.arm)).unwrap();
        writeln!(out, "# env={}", clean(&self.env)).unwrap();
        writeln!(out, "# seed={}", self.seed).unwrap();
        writeln!(out, "# diverged={}", self.diverged).unwrap();
        if let Some(r) = &self.divergence_reason {
            writeln!(out, "# divergence_reason={}", clean(r)).unwrap();
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        out.push_str(&self.data_rows());
        out
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
        let mut meta = BTreeMap::new();
        let mut rows = Vec::new();
        let mut saw_header = false;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(m) = line.strip_prefix('#') {
                if let Some((k, v)) = m.trim_start().split_once('=') {
                    meta.insert(k.trim().to_string(), v.to_string());
                }
                continue;
            }
            if !saw_header {
                if line.trim() != CSV_HEADER {
                    return Err(err(ln, format!("expected header `{CSV_HEADER}`")));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(err(ln, format!("expected 9 fields, found {}", fields.len())));
            }
            let req_u64 = |j: usize| fields[j].trim().parse::<u64>().map_err(|e| err(ln, format!("field {}: {e}", j + 1)));
            let opt = |j: usize| -> Result<Option<f64>> {
                let f = fields[j].trim();
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>().map(Some).map_err(|e| err(ln, format!("field {}: `{f}`: {e}", j + 1)))
                }
            };
            let req = |j: usize| opt(j)?.ok_or_else(|| err(ln, format!("field {} is required", j + 1)));
            rows.push(LogRow {
                env_step: req_u64(0)?,
                update_index: req_u64(1)?,
                episode_reward: opt(2)?,
                lr: req(3)?,
                momentum: req(4)?,
                policy_loss: opt(5)?,
                value_loss: opt(6)?,
                entropy: opt(7)?,
                approx_kl: opt(8)?,
            });
        }
        if !saw_header {
            return Err(err(0, "missing CSV header".into()));
        }
        let seed = match meta.get("seed") {
            Some(s) => s.trim().parse().map_err(|_| err(0, format!("bad seed `{s}`")))?,
            None => 0,
        };
        Ok(RunLog {
            run_id: meta.get("run_id").cloned().unwrap_or_default(),
            arm: meta.get("arm").cloned().unwrap_or_default(),
            env: meta.get("env").cloned().unwrap_or_default(),
            seed,
            diverged: meta.get("diverged").map(|d| d.trim() == "true").unwrap_or(false),
            divergence_reason: meta.get("divergence_reason").cloned(),
            rows,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }
}
