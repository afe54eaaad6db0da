use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cyclic_rl::envs::EnvId;
use cyclic_rl::harness::{self, ExperimentConfig, PlotKind, RunLog};
use cyclic_rl::nn::checkpoint;
use cyclic_rl::ppo::{self, PpoConfig};
use cyclic_rl::schedule::{MomentumCycle, PolicyKind, Schedule, SchedulePolicy};
use cyclic_rl::{Error, Result};

#[derive(Parser)]
#[command(name = "cyclic-rl", version, about = "PPO with cyclical learning-rate and momentum schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run and write its CSV log.
    Train(TrainArgs),
    /// Run every arm and seed of a configuration file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Override a configuration key, e.g. `--set seeds=0,1`.
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_kv)]
        overrides: Vec<(String, String)>,
    },
    /// Sweep the learning rate linearly over consecutive updates.
    LrFind {
        #[arg(long)]
        env: EnvId,
        #[arg(long, default_value_t = 1e-5)]
        lr_start: f64,
        #[arg(long, default_value_t = 1e-1)]
        lr_end: f64,
        #[arg(long, default_value_t = 200)]
        updates: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Override a PPO setting, e.g. `--set clip_epsilon=0.1`.
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_kv)]
        ppo: Vec<(String, String)>,
    },
    /// Render CSV logs as an SVG line plot.
    Plot {
        #[arg(long)]
        kind: PlotKind,
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the learning rate and momentum of a schedule without training.
    Schedule {
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long, default_value_t = 10_000)]
        updates: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long = "schedule", default_value = "triangular")]
    kind: PolicyKind,
    /// Learning rate of the constant schedule.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    lr_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    lr_max: f64,
    /// Half-cycle length in updates.
    #[arg(long, default_value_t = 2000)]
    stepsize: u64,
    /// Per-cycle decay of the exp_range bounds.
    #[arg(long, default_value_t = 0.99)]
    decay: f64,
    /// Cycle momentum opposite to the learning rate.
    #[arg(long)]
    cycle_momentum: bool,
    #[arg(long, default_value_t = 0.8)]
    m_min: f64,
    #[arg(long, default_value_t = 1.0)]
    m_max: f64,
    /// Momentum used when it is not cycled.
    #[arg(long, default_value_t = harness::DEFAULT_FIXED_MOMENTUM)]
    momentum: f64,
}

impl ScheduleArgs {
    fn build(&self) -> Result<Schedule> {
        let policy = match self.kind {
            PolicyKind::Constant => SchedulePolicy::constant(self.lr)?,
            PolicyKind::Triangular => SchedulePolicy::triangular(self.lr_min, self.lr_max, self.stepsize)?,
            PolicyKind::ExpRange => SchedulePolicy::exp_range(self.lr_min, self.lr_max, self.stepsize, self.decay)?,
        };
        let momentum = if self.cycle_momentum {
            MomentumCycle::new(true, self.m_min, self.m_max)?
        } else {
            if !(0.0..1.0).contains(&self.momentum) {
                return Err(Error::InvalidConfig(format!("momentum must be in [0, 1), got {}", self.momentum)));
            }
            MomentumCycle::fixed(self.momentum)
        };
        Schedule::new(policy, momentum)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    env: EnvId,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    total_steps: u64,
    /// CSV log path.
    #[arg(long)]
    out: PathBuf,
    /// Also save the final policy network here.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Override a PPO setting, e.g. `--set optimizer=sgd`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_kv)]
    ppo: Vec<(String, String)>,
}

fn parse_kv(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("expected KEY=VALUE, got `{s}`")),
    }
}

fn ppo_config(env: EnvId, overrides: &[(String, String)]) -> Result<PpoConfig> {
    let mut cfg = PpoConfig::for_env(env);
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_divergence(log: &RunLog) {
    if log.diverged {
        eprintln!("run {} diverged: {}", log.run_id, log.divergence_reason.as_deref().unwrap_or("unknown cause"));
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let schedule = a.schedule.build()?;
            let cfg = ppo_config(a.env, &a.ppo)?;
            let (mut log, agent) = ppo::train_agent(a.env, &schedule, &cfg, a.seed, a.total_steps)?;
            log.run_id = format!("{}-{}-{}", a.schedule.kind, a.env, a.seed);
            log.write(&a.out)?;
            if let Some(path) = &a.checkpoint {
                checkpoint::save(path, &agent.policy, agent.log_std.as_deref())?;
            }
            report_divergence(&log);
            let solved = log.solved_at(100, 195.0).map(|s| format!(", solved at step {s}")).unwrap_or_default();
            println!("wrote {} ({} episodes{solved})", a.out.display(), log.episode_rewards().len());
        }
        Command::Experiment { config, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let report = harness::run_experiment(&cfg)?;
            for o in &report.outcomes {
                match &o.result {
                    Ok((path, log)) => {
                        report_divergence(log);
                        println!("{} seed {}: {}", o.arm, o.seed, path.display());
                    }
                    Err(e) => eprintln!("{} seed {}: error: {e}", o.arm, o.seed),
                }
            }
            println!("summary: {}", report.summary_path.display());
            if report.n_failed() > 0 {
                return Err(Error::InvalidConfig(format!("{} run(s) failed", report.n_failed())));
            }
        }
        Command::LrFind { env, lr_start, lr_end, updates, seed, out, ppo } => {
            let cfg = ppo_config(env, &ppo)?;
            let r = harness::lr_find(env, lr_start, lr_end, updates, seed, &cfg)?;
            r.write(&out)?;
            if r.diverged {
                eprintln!("diverged: {}", r.reason.as_deref().unwrap_or("unknown cause"));
            }
            println!("wrote {} ({} points)", out.display(), r.points.len());
        }
        Command::Plot { kind, inputs, out } => {
            harness::emit_plot(&inputs, kind, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Schedule { schedule, updates, out } => {
            let s = schedule.build()?;
            harness::schedule_log(schedule.kind.as_str(), &s, updates).write(&out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
