use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::runlog::RunLog;
use super::write_atomic;
use crate::error::{Error, Result};
use crate::ppo::train;
use crate::schedule::Schedule;

#[derive(Debug)]
pub struct RunOutcome {
    pub arm: String,
    pub seed: u64,
    pub result: Result<(PathBuf, RunLog)>,
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub outcomes: Vec<RunOutcome>,
    pub summary_path: PathBuf,
}

impl ExperimentReport {
    pub fn n_failed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.result.is_err()).count()
    }
}

pub fn run_file_name(arm: &str, seed: u64) -> String {
    format!("{arm}_seed{seed}.csv")
}

/// One training run per (arm, seed), `config.workers` at a time. Every arm
/// sees the same seed list. A failing run is recorded in the report and in
/// `summary.csv`; the other runs continue.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let jobs: Vec<(usize, u64)> = (0..config.arms.len()).flat_map(|a| config.seeds.iter().map(move |&s| (a, s))).collect();

    let run_one = |&(a, seed): &(usize, u64)| -> RunOutcome {
        let arm = &config.arms[a];
        let result = run_arm(config, &arm.name, &arm.schedule, seed);
        RunOutcome { arm: arm.name.clone(), seed, result }
    };
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(config.workers).build().map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| jobs.par_iter().map(run_one).collect());

    let mut summary = String::from("arm,seed,status,detail\n");
    for o in &outcomes {
        match &o.result {
            Ok((path, log)) => {
                let status = if log.diverged { "diverged" } else { "ok" };
                writeln!(summary, "{},{},{},{}", o.arm, o.seed, status, path.display()).unwrap();
            }
            Err(e) => writeln!(summary, "{},{},error,{}", o.arm, o.seed, e.to_string().replace([',', '\n'], ";")).unwrap(),
        }
    }
    let summary_path = config.out_dir.join("summary.csv");
    write_atomic(&summary_path, summary.as_bytes())?;
    Ok(ExperimentReport { outcomes, summary_path })
}

fn run_arm(config: &ExperimentConfig, arm: &str, schedule: &Schedule, seed: u64) -> Result<(PathBuf, RunLog)> {
    let mut log = train(config.env, schedule, &config.ppo, seed, config.total_steps)?;
    log.arm = arm.to_string();
    log.run_id = format!("{arm}-{}-{seed}", config.env);
    let path = config.out_dir.join(run_file_name(arm, seed));
    log.write(&path)?;
    Ok((path, log))
}
