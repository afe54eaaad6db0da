//! Experiment runner, learning-rate range test, CSV run logs and SVG plots.

mod config;
mod experiment;
mod lrfind;
mod plot;
mod runlog;

use std::io::Write;
use std::path::Path;

pub use config::{general_arms, Arm, ExperimentConfig, DEFAULT_FIXED_MOMENTUM};
pub use experiment::{run_experiment, run_file_name, ExperimentReport, RunOutcome};
pub use lrfind::{lr_find, sweep_lr, LrFindPoint, LrFindResult, DIVERGENCE_FACTOR, LRFIND_HEADER};
pub use plot::{emit_plot, lrfind_svg, reward_svg, schedule_svg, trailing_mean, PlotKind, REWARD_SMOOTHING};
pub use runlog::{LogRow, RunLog, CSV_HEADER};

use crate::error::{Error, Result};
use crate::schedule::Schedule;

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// A log holding only the schedule: one row per update, no training.
pub fn schedule_log(arm: &str, schedule: &Schedule, n_updates: u64) -> RunLog {
    let mut log = RunLog::new(format!("{arm}-schedule"), arm, "none", 0);
    for u in 0..n_updates {
        let (lr, m) = schedule.at(u);
        let mut row = LogRow::episode(u, u, 0.0, lr, m);
        row.episode_reward = None;
        log.rows.push(row);
    }
    log
}
