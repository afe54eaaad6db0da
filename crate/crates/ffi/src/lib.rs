//! C ABI over `cyclic-rl`.
//!
//! Objects are opaque handles created by `crl_*_new` (or `crl_train`) and
//! released with the matching `crl_*_free`. Every fallible call returns a
//! [`CrlStatus`]; on failure, [`crl_last_error`] describes the error for the
//! calling thread. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cyclic_rl::envs::{ActionSpace, Env, EnvId};
use cyclic_rl::harness::RunLog;
use cyclic_rl::nn::Action;
use cyclic_rl::ppo::{self, PpoConfig};
use cyclic_rl::schedule::{MomentumCycle, Schedule, SchedulePolicy};
use cyclic_rl::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    EpisodeOver = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrlPolicy {
    Constant = 0,
    Triangular = 1,
    ExpRange = 2,
}

/// Schedule description. `lr` is used by the constant policy; `lr_min`,
/// `lr_max`, `stepsize` (and `decay` for exp_range) by the cyclical ones.
/// With `cycle_momentum` momentum moves between `m_max` and `m_min`,
/// otherwise it stays at `momentum`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CrlScheduleParams {
    pub policy: CrlPolicy,
    pub lr: f64,
    pub lr_min: f64,
    pub lr_max: f64,
    pub stepsize: u64,
    pub decay: f64,
    pub cycle_momentum: bool,
    pub m_min: f64,
    pub m_max: f64,
    pub momentum: f64,
}

/// One run-log row. Optional values are NaN when their flag is false.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CrlLogRow {
    pub env_step: u64,
    pub update_index: u64,
    pub has_episode_reward: bool,
    pub episode_reward: f64,
    pub lr: f64,
    pub momentum: f64,
    pub has_metrics: bool,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
}

/// Opaque learning-rate and momentum schedule.
pub struct CrlSchedule(Schedule);

/// Opaque environment instance.
pub struct CrlEnv(Box<dyn Env>);

/// Opaque training log.
pub struct CrlRunLog(RunLog);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CrlStatus {
    match e {
        Error::ActionOutOfRange { .. } | Error::ShapeMismatch { .. } => CrlStatus::OutOfRange,
        Error::EpisodeOver => CrlStatus::EpisodeOver,
        Error::Io { .. } => CrlStatus::Io,
        Error::Parse { .. } => CrlStatus::Parse,
        _ => CrlStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic for [`crl_last_error`].
fn guard(f: impl FnOnce() -> Result<(), (CrlStatus, String)>) -> CrlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CrlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CrlStatus::Panic
        }
    }
}

fn lib(e: Error) -> (CrlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CrlStatus, String) {
    (CrlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CrlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (CrlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (CrlStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next `crl_*` call on the same thread.
#[no_mangle]
pub extern "C" fn crl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn crl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Cyclical defaults: triangular 1e-4..1e-2, stepsize 2000, decay 0.99,
/// momentum cycled 1.0..0.8.
#[no_mangle]
pub extern "C" fn crl_schedule_params_default() -> CrlScheduleParams {
    CrlScheduleParams {
        policy: CrlPolicy::Triangular,
        lr: 1e-3,
        lr_min: 1e-4,
        lr_max: 1e-2,
        stepsize: 2000,
        decay: 0.99,
        cycle_momentum: true,
        m_min: 0.8,
        m_max: 1.0,
        momentum: 0.9,
    }
}

fn build_schedule(p: &CrlScheduleParams) -> Result<Schedule, Error> {
    let policy = match p.policy {
        CrlPolicy::Constant => SchedulePolicy::constant(p.lr)?,
        CrlPolicy::Triangular => SchedulePolicy::triangular(p.lr_min, p.lr_max, p.stepsize)?,
        CrlPolicy::ExpRange => SchedulePolicy::exp_range(p.lr_min, p.lr_max, p.stepsize, p.decay)?,
    };
    let momentum = if p.cycle_momentum {
        MomentumCycle::new(true, p.m_min, p.m_max)?
    } else if (0.0..1.0).contains(&p.momentum) {
        MomentumCycle::fixed(p.momentum)
    } else {
        return Err(Error::InvalidConfig(format!("momentum must be in [0, 1), got {}", p.momentum)));
    };
    Schedule::new(policy, momentum)
}

/// # Safety
/// `params` must point to a valid struct and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn crl_schedule_new(params: *const CrlScheduleParams, out: *mut *mut CrlSchedule) -> CrlStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out_ptr(out)?;
        *out = Box::into_raw(Box::new(CrlSchedule(build_schedule(p).map_err(lib)?)));
        Ok(())
    })
}

unsafe fn out_ptr<'a, T>(p: *mut *mut T) -> Result<&'a mut *mut T, (CrlStatus, String)> {
    out(p, "out")
}

/// Learning rate and momentum for optimizer update `step`.
///
/// # Safety
/// `schedule` must come from [`crl_schedule_new`]; `lr` and `momentum`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn crl_schedule_at(schedule: *const CrlSchedule, step: u64, lr: *mut f64, momentum: *mut f64) -> CrlStatus {
    guard(|| {
        let s = schedule.as_ref().ok_or_else(|| null("schedule"))?;
        let (l, m) = s.0.at(step);
        *out(lr, "lr")? = l;
        *out(momentum, "momentum")? = m;
        Ok(())
    })
}

/// # Safety
/// `schedule` must come from [`crl_schedule_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn crl_schedule_free(schedule: *mut CrlSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Creates `cartpole`, `pendulum` or `chain`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crl_env_new(name: *const c_char, out: *mut *mut CrlEnv) -> CrlStatus {
    guard(|| {
        let id: EnvId = str_arg(name, "name")?.parse().map_err(lib)?;
        *out_ptr(out)? = Box::into_raw(Box::new(CrlEnv(id.make())));
        Ok(())
    })
}

/// Observation length, action length (1 for discrete spaces) and whether
/// actions are discrete.
///
/// # Safety
/// `env` must come from [`crl_env_new`]; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn crl_env_dims(env: *const CrlEnv, obs_dim: *mut usize, action_dim: *mut usize, discrete: *mut bool) -> CrlStatus {
    guard(|| {
        let spec = env.as_ref().ok_or_else(|| null("env"))?.0.spec();
        *out(obs_dim, "obs_dim")? = spec.obs_dim;
        let (dim, disc) = match spec.action_space {
            ActionSpace::Discrete(_) => (1, true),
            ActionSpace::Box { ref low, .. } => (low.len(), false),
        };
        *out(action_dim, "action_dim")? = dim;
        *out(discrete, "discrete")? = disc;
        Ok(())
    })
}

unsafe fn write_obs(src: &[f64], dst: *mut f64, len: usize) -> Result<(), (CrlStatus, String)> {
    if dst.is_null() {
        return Err(null("obs"));
    }
    if len != src.len() {
        return Err((CrlStatus::OutOfRange, format!("observation buffer holds {len} values, need {}", src.len())));
    }
    std::slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
    Ok(())
}

/// Starts an episode and writes the first observation.
///
/// # Safety
/// `env` must come from [`crl_env_new`]; `obs` must hold `obs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn crl_env_reset(env: *mut CrlEnv, seed: u64, obs: *mut f64, obs_len: usize) -> CrlStatus {
    guard(|| {
        let e = env.as_mut().ok_or_else(|| null("env"))?;
        let o = e.0.reset(seed);
        write_obs(&o, obs, obs_len)
    })
}

/// Applies one action. Discrete actions are passed as a single value
/// holding the action index.
///
/// # Safety
/// `env` must come from [`crl_env_new`]; `action` must hold `action_len`
/// doubles, `obs` `obs_len` doubles; the remaining pointers must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn crl_env_step(
    env: *mut CrlEnv,
    action: *const f64,
    action_len: usize,
    obs: *mut f64,
    obs_len: usize,
    reward: *mut f64,
    done: *mut bool,
    truncated: *mut bool,
) -> CrlStatus {
    guard(|| {
        let e = env.as_mut().ok_or_else(|| null("env"))?;
        if action.is_null() {
            return Err(null("action"));
        }
        let a = std::slice::from_raw_parts(action, action_len);
        let act = match e.0.spec().action_space {
            ActionSpace::Discrete(_) => match a {
                [x] if *x >= 0.0 && x.fract() == 0.0 => Action::Discrete(*x as usize),
                _ => return Err((CrlStatus::OutOfRange, "discrete action must be one non-negative integer".into())),
            },
            ActionSpace::Box { .. } => Action::Continuous(a.to_vec()),
        };
        let tr = e.0.step(&act).map_err(lib)?;
        write_obs(&tr.observation, obs, obs_len)?;
        *out(reward, "reward")? = tr.reward;
        *out(done, "done")? = tr.done;
        *out(truncated, "truncated")? = tr.truncated;
        Ok(())
    })
}

/// # Safety
/// `env` must come from [`crl_env_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn crl_env_free(env: *mut CrlEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Trains PPO with the environment's default settings until at least
/// `total_steps` environment steps. A run that diverges still succeeds;
/// check [`crl_runlog_diverged`].
///
/// # Safety
/// `env_name` must be a NUL-terminated string, `schedule` a live handle and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crl_train(
    env_name: *const c_char,
    schedule: *const CrlSchedule,
    seed: u64,
    total_steps: u64,
    out: *mut *mut CrlRunLog,
) -> CrlStatus {
    guard(|| {
        let id: EnvId = str_arg(env_name, "env_name")?.parse().map_err(lib)?;
        let s = schedule.as_ref().ok_or_else(|| null("schedule"))?;
        let out = out_ptr(out)?;
        let log = ppo::train(id, &s.0, &PpoConfig::for_env(id), seed, total_steps).map_err(lib)?;
        *out = Box::into_raw(Box::new(CrlRunLog(log)));
        Ok(())
    })
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `log` must come from [`crl_train`] or be null.
#[no_mangle]
pub unsafe extern "C" fn crl_runlog_len(log: *const CrlRunLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.rows.len())
}

/// # Safety
/// `log` must come from [`crl_train`] or be null.
#[no_mangle]
pub unsafe extern "C" fn crl_runlog_diverged(log: *const CrlRunLog) -> bool {
    log.as_ref().is_some_and(|l| l.0.diverged)
}

/// # Safety
/// `log` must come from [`crl_train`]; `row` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crl_runlog_row(log: *const CrlRunLog, index: usize, row: *mut CrlLogRow) -> CrlStatus {
    guard(|| {
        let l = log.as_ref().ok_or_else(|| null("log"))?;
        let r = l.0.rows.get(index).ok_or_else(|| (CrlStatus::OutOfRange, format!("row {index} of {}", l.0.rows.len())))?;
        *out(row, "row")? = CrlLogRow {
            env_step: r.env_step,
            update_index: r.update_index,
            has_episode_reward: r.episode_reward.is_some(),
            episode_reward: r.episode_reward.unwrap_or(f64::NAN),
            lr: r.lr,
            momentum: r.momentum,
            has_metrics: r.is_update(),
            policy_loss: r.policy_loss.unwrap_or(f64::NAN),
            value_loss: r.value_loss.unwrap_or(f64::NAN),
            entropy: r.entropy.unwrap_or(f64::NAN),
            approx_kl: r.approx_kl.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Writes the log in the CLI's CSV format.
///
/// # Safety
/// `log` must come from [`crl_train`]; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn crl_runlog_write_csv(log: *const CrlRunLog, path: *const c_char) -> CrlStatus {
    guard(|| {
        let l = log.as_ref().ok_or_else(|| null("log"))?;
        let p = str_arg(path, "path")?;
        l.0.write(Path::new(p)).map_err(lib)
    })
}

/// # Safety
/// `log` must come from [`crl_train`] or be null.
#[no_mangle]
pub unsafe extern "C" fn crl_runlog_free(log: *mut CrlRunLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}
