use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use cyclic_rl_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(crl_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn schedule_round_trip() {
    let params = crl_schedule_params_default();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { crl_schedule_new(&params, &mut h) }, CrlStatus::Ok);
    let (mut lr, mut m) = (0.0, 0.0);
    for (step, want_lr, want_m) in [(0, 1e-4, 1.0), (1000, 5.05e-3, 0.9), (2000, 1e-2, 0.8)] {
        assert_eq!(unsafe { crl_schedule_at(h, step, &mut lr, &mut m) }, CrlStatus::Ok);
        assert_eq!((lr, m), (want_lr, want_m));
    }
    unsafe { crl_schedule_free(h) };
}

#[test]
fn invalid_schedule_reports_error() {
    let mut params = crl_schedule_params_default();
    params.lr_min = 0.5;
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { crl_schedule_new(&params, &mut h) }, CrlStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    params = crl_schedule_params_default();
    params.policy = CrlPolicy::Constant;
    assert_eq!(unsafe { crl_schedule_new(&params, &mut h) }, CrlStatus::InvalidArgument, "constant policy cannot cycle momentum");
    params.cycle_momentum = false;
    assert_eq!(unsafe { crl_schedule_new(&params, &mut h) }, CrlStatus::Ok);
    assert!(last_error().is_empty());
    unsafe { crl_schedule_free(h) };
}

#[test]
fn null_pointers_rejected() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { crl_schedule_new(ptr::null(), &mut h) }, CrlStatus::NullPointer);
    let (mut lr, mut m) = (0.0, 0.0);
    assert_eq!(unsafe { crl_schedule_at(ptr::null(), 0, &mut lr, &mut m) }, CrlStatus::NullPointer);
    assert_eq!(unsafe { crl_env_new(ptr::null(), ptr::null_mut()) }, CrlStatus::NullPointer);
    assert_eq!(unsafe { crl_runlog_len(ptr::null()) }, 0);
    unsafe {
        crl_schedule_free(ptr::null_mut());
        crl_env_free(ptr::null_mut());
        crl_runlog_free(ptr::null_mut());
    }
}

#[test]
fn cartpole_episode_through_c_abi() {
    let name = CString::new("cartpole").unwrap();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { crl_env_new(name.as_ptr(), &mut env) }, CrlStatus::Ok);
    let (mut od, mut ad, mut disc) = (0usize, 0usize, false);
    assert_eq!(unsafe { crl_env_dims(env, &mut od, &mut ad, &mut disc) }, CrlStatus::Ok);
    assert_eq!((od, ad, disc), (4, 1, true));

    let mut obs = [0.0f64; 4];
    assert_eq!(unsafe { crl_env_reset(env, 3, obs.as_mut_ptr(), 4) }, CrlStatus::Ok);
    assert!(obs.iter().all(|x| x.abs() <= 0.05));

    let (mut r, mut done, mut trunc) = (0.0, false, false);
    let mut total = 0.0;
    while !(done || trunc) {
        let a = [1.0];
        assert_eq!(unsafe { crl_env_step(env, a.as_ptr(), 1, obs.as_mut_ptr(), 4, &mut r, &mut done, &mut trunc) }, CrlStatus::Ok);
        total += r;
    }
    assert!(done && total > 0.0);
    let a = [0.0];
    assert_eq!(unsafe { crl_env_step(env, a.as_ptr(), 1, obs.as_mut_ptr(), 4, &mut r, &mut done, &mut trunc) }, CrlStatus::EpisodeOver);

    unsafe { crl_env_reset(env, 3, obs.as_mut_ptr(), 4) };
    let bad = [2.0];
    assert_eq!(unsafe { crl_env_step(env, bad.as_ptr(), 1, obs.as_mut_ptr(), 4, &mut r, &mut done, &mut trunc) }, CrlStatus::OutOfRange);
    let half = [0.5];
    assert_eq!(unsafe { crl_env_step(env, half.as_ptr(), 1, obs.as_mut_ptr(), 4, &mut r, &mut done, &mut trunc) }, CrlStatus::OutOfRange);
    assert_eq!(unsafe { crl_env_reset(env, 3, obs.as_mut_ptr(), 3) }, CrlStatus::OutOfRange);
    unsafe { crl_env_free(env) };

    let unknown = CString::new("acrobot").unwrap();
    assert_eq!(unsafe { crl_env_new(unknown.as_ptr(), &mut env) }, CrlStatus::InvalidArgument);
}

#[test]
fn train_and_read_log() {
    let mut params = crl_schedule_params_default();
    params.stepsize = 4;
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { crl_schedule_new(&params, &mut s) }, CrlStatus::Ok);
    let env = CString::new("chain").unwrap();
    let mut log = ptr::null_mut();
    assert_eq!(unsafe { crl_train(env.as_ptr(), s, 1, 2048, &mut log) }, CrlStatus::Ok);
    let n = unsafe { crl_runlog_len(log) };
    assert!(n > 0);
    assert!(!unsafe { crl_runlog_diverged(log) });

    let mut row = std::mem::MaybeUninit::<CrlLogRow>::uninit();
    let mut updates = 0;
    let mut last_step = 0;
    for i in 0..n {
        assert_eq!(unsafe { crl_runlog_row(log, i, row.as_mut_ptr()) }, CrlStatus::Ok);
        let r = unsafe { row.assume_init() };
        assert!(r.env_step > last_step);
        last_step = r.env_step;
        assert_eq!(r.has_episode_reward, !r.episode_reward.is_nan());
        if r.has_metrics {
            updates += 1;
            assert!(r.policy_loss.is_finite() && r.approx_kl >= 0.0);
        }
    }
    assert_eq!(updates, 8);
    assert_eq!(unsafe { crl_runlog_row(log, n, row.as_mut_ptr()) }, CrlStatus::OutOfRange);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("run.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { crl_runlog_write_csv(log, path.as_ptr()) }, CrlStatus::Ok);
    let text = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert!(text.contains("env_step,update_index,episode_reward"));
    unsafe {
        crl_runlog_free(log);
        crl_schedule_free(s);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("cyclic_rl.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "crl_last_error",
        "crl_schedule_new",
        "crl_schedule_at",
        "crl_env_step",
        "crl_train",
        "crl_runlog_row",
        "typedef struct CrlSchedule CrlSchedule",
        "CRL_STATUS_OK = 0",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"cyclic_rl.h\"\nint main(void) {\n  CrlScheduleParams p = crl_schedule_params_default();\n  CrlSchedule *s = 0;\n  double lr, m;\n  if (crl_schedule_new(&p, &s) != CRL_STATUS_OK) return 1;\n  crl_schedule_at(s, 1000, &lr, &m);\n  crl_schedule_free(s);\n  return lr > 0.0 ? 0 : 2;\n}\n",
    )
    .unwrap();
    let inc = header().parent().unwrap().to_path_buf();
    let status = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"]).arg(&inc).arg(&src).status().unwrap();
    assert!(status.success(), "header does not compile");
}
