//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use cyclic_rl::envs::{trajectory_probability, ChainMdp, EnvId, Trajectory};
use cyclic_rl::harness::lr_find;
use cyclic_rl::nn::Mlp;
use cyclic_rl::ppo::{gae, minibatch_loss, minibatch_loss_and_grad, train, ActorCritic, Minibatch, PpoConfig};
use cyclic_rl::schedule::{bounds_at_cycle, cycle_index, lr_at, momentum_at, MomentumCycle, Schedule, SchedulePolicy};

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
const ORACLE_TOL: f64 = 1e-10;
const ENVELOPE_TOL: f64 = 1e-15;
const SOLVE_WINDOW: usize = 100;
const SOLVE_THRESHOLD: f64 = 195.0;
const SEEDS: [u64; 3] = [0, 1, 2];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn general_triangular() -> SchedulePolicy {
    SchedulePolicy::triangular(1e-4, 1e-2, 2000).unwrap()
}

fn schedule_exactness() -> Outcome {
    let p = general_triangular();
    let expected = [(0, 1e-4), (1000, 5.05e-3), (2000, 1e-2), (3000, 5.05e-3), (4000, 1e-4)];
    for (step, want) in expected {
        let got = lr_at(&p, step);
        if got != want {
            return Err(format!("lr_at({step}) = {got:e}, expected {want:e}"));
        }
    }
    Ok("steps 0,1000,2000,3000,4000 bit-exact".into())
}

fn exp_range_envelope() -> Outcome {
    let lambda = 0.99;
    let p = SchedulePolicy::exp_range(1e-4, 1e-2, 2000, lambda).unwrap();
    let tri = general_triangular();
    let mut worst_ratio = 0.0f64;
    let mut prev = bounds_at_cycle(&p, 0).unwrap();
    for k in 1..=100 {
        let cur = bounds_at_cycle(&p, k).unwrap();
        // Each cycle's bounds are the previous bounds times the decay,
        // evaluated in floating point.
        if cur.0 != prev.0 * lambda || cur.1 != prev.1 * lambda {
            return Err(format!("bounds({k}) != 0.99 * bounds({})", k - 1));
        }
        worst_ratio = worst_ratio.max((cur.0 / prev.0 - lambda).abs()).max((cur.1 / prev.1 - lambda).abs());
        prev = cur;
    }
    let mut worst = 0.0f64;
    for step in 0..10 * 2 * 2000 {
        let k = cycle_index(step, 2000);
        let want = lambda.powi(k as i32) * lr_at(&tri, step);
        let rel = (lr_at(&p, step) - want).abs() / want;
        worst = worst.max(rel);
    }
    if worst >= ENVELOPE_TOL {
        return Err(format!("envelope max relative error {worst:e} >= {ENVELOPE_TOL:e}"));
    }
    Ok(format!(
        "bounds(k) == 0.99*bounds(k-1) for k<=100 (quotient off by <= {worst_ratio:.1e}); envelope rel err {worst:.1e} over 10 cycles"
    ))
}

fn arg_extreme(values: &[(u64, f64)], max: bool) -> Vec<u64> {
    let best =
        values.iter().map(|v| v.1).fold(if max { f64::NEG_INFINITY } else { f64::INFINITY }, |a, b| if max { a.max(b) } else { a.min(b) });
    values.iter().filter(|v| v.1 == best).map(|v| v.0).collect()
}

fn momentum_anti_cycling() -> Outcome {
    let cyc = MomentumCycle::cycling();
    let policies = [general_triangular(), SchedulePolicy::exp_range(1e-4, 1e-2, 2000, 0.99).unwrap()];
    let mut m_lo = f64::INFINITY;
    let mut m_hi = f64::NEG_INFINITY;
    for p in &policies {
        for first in [0u64, 5, 17] {
            for cycle in first..first + 3 {
                let steps = cycle * 4000..(cycle + 1) * 4000;
                let lrs: Vec<(u64, f64)> = steps.clone().map(|t| (t, lr_at(p, t))).collect();
                let ms: Vec<(u64, f64)> = steps.map(|t| (t, momentum_at(p, &cyc, t).unwrap())).collect();
                let lr_max = arg_extreme(&lrs, true);
                let m_min = arg_extreme(&ms, false);
                if lr_max != m_min {
                    return Err(format!("{:?} cycle {cycle}: lr argmax {lr_max:?} vs momentum argmin {m_min:?}", p.kind()));
                }
                let lr_min = arg_extreme(&lrs, false);
                let m_max = arg_extreme(&ms, true);
                if lr_min != m_max {
                    return Err(format!("{:?} cycle {cycle}: lr argmin {lr_min:?} vs momentum argmax {m_max:?}", p.kind()));
                }
                for (_, m) in ms {
                    m_lo = m_lo.min(m);
                    m_hi = m_hi.max(m);
                }
            }
        }
    }
    if m_lo != 0.8 || m_hi != 1.0 {
        return Err(format!("momentum range [{m_lo}, {m_hi}], expected [0.8, 1.0]"));
    }
    Ok("argmax lr == argmin momentum per cycle over three 3-cycle windows, endpoints exactly 0.8/1.0".into())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// ‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖) for one case.
fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

fn central_difference(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + FD_STEP;
            let up = f(&p);
            p[i] = x[i] - FD_STEP;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn network_case(rng: &mut ChaCha8Rng) -> f64 {
    let depth = rng.random_range(1..=4);
    let sizes: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=9)).collect();
    let mut net = Mlp::orthogonal(&sizes, 2f64.sqrt(), 1.0, rng).unwrap();
    let params: Vec<f64> = net.params().iter().map(|p| p + 0.1 * normal(rng)).collect();
    net.set_params(&params).unwrap();
    let x: Vec<f64> = (0..sizes[0]).map(|_| normal(rng)).collect();
    let up: Vec<f64> = (0..sizes[depth]).map(|_| normal(rng)).collect();
    let analytic = net.backward(&x, &up).unwrap();
    let mut probe = net.clone();
    let numeric = central_difference(&params, |p| {
        probe.set_params(p).unwrap();
        probe.forward(&x).unwrap().iter().zip(&up).map(|(o, u)| o * u).sum()
    });
    rel_error(&analytic, &numeric)
}

fn ppo_loss_case(rng: &mut ChaCha8Rng, env: EnvId) -> f64 {
    let config = PpoConfig { entropy_coef: 0.01, value_coef: 0.5, clip_epsilon: 0.2, ..PpoConfig::for_env(env) };
    let spec = env.make().spec().clone();
    let mut agent = ActorCritic::new(&spec, &[8, 8], rng).unwrap();
    let jitter: Vec<f64> = agent.policy_params().iter().map(|p| p + 0.3 * normal(rng)).collect();
    agent.set_policy_params(&jitter).unwrap();

    let n = 8;
    let mut mb = Minibatch { observations: vec![], actions: vec![], old_log_probs: vec![], advantages: vec![], returns: vec![] };
    for _ in 0..n {
        let obs: Vec<f64> = (0..spec.obs_dim).map(|_| normal(rng)).collect();
        let dist = agent.dist(&obs).unwrap();
        let (action, lp) = dist.sample(rng);
        // Log-ratio either well inside the clip range or well outside it,
        // so no sample sits on a kink of the clipped objective.
        let shift = if rng.random_bool(0.5) {
            rng.random_range(-0.12..0.12)
        } else {
            rng.random_range(0.3..0.6) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }
        };
        mb.observations.push(obs);
        mb.actions.push(action);
        mb.old_log_probs.push(lp - shift);
        mb.advantages.push(normal(rng));
        mb.returns.push(normal(rng));
    }

    let (_, pg, vg) = minibatch_loss_and_grad(&agent, &mb, &config).unwrap();
    let mut probe = agent.clone();
    let pnum = central_difference(&agent.policy_params(), |p| {
        probe.set_policy_params(p).unwrap();
        minibatch_loss(&probe, &mb, &config).unwrap().total_loss
    });
    let mut probe = agent.clone();
    let vnum = central_difference(&agent.value.params(), |p| {
        probe.value.set_params(p).unwrap();
        minibatch_loss(&probe, &mb, &config).unwrap().total_loss
    });
    let analytic: Vec<f64> = pg.into_iter().chain(vg).collect();
    let numeric: Vec<f64> = pnum.into_iter().chain(vnum).collect();
    rel_error(&analytic, &numeric)
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let net: f64 = (0..100).map(|_| network_case(&mut rng)).fold(0.0, f64::max);
    let cat: f64 = (0..60).map(|_| ppo_loss_case(&mut rng, EnvId::CartPole)).fold(0.0, f64::max);
    let gauss: f64 = (0..60).map(|_| ppo_loss_case(&mut rng, EnvId::Pendulum)).fold(0.0, f64::max);
    let worst = net.max(cat).max(gauss);
    let detail = format!("max rel err: networks {net:.1e} (100 cases), PPO loss categorical {cat:.1e} (60), gaussian {gauss:.1e} (60)");
    if worst < FD_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Advantage as the explicit discounted sum of TD residuals, cut at episode
/// ends.
fn gae_expansion(r: &[f64], v: &[f64], d: &[bool], gamma: f64, lambda: f64, bootstrap: f64) -> Vec<f64> {
    let n = r.len();
    let next_v = |t: usize| if t + 1 < n { v[t + 1] } else { bootstrap };
    let delta = |t: usize| r[t] + if d[t] { 0.0 } else { gamma * next_v(t) } - v[t];
    (0..n)
        .map(|t| {
            let mut sum = 0.0;
            for l in 0..n - t {
                sum += (gamma * lambda).powi(l as i32) * delta(t + l);
                if d[t + l] {
                    break;
                }
            }
            sum
        })
        .collect()
}

fn enumerate(len: usize, base: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|p| (0..base).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() + 1e-3 }).collect();
    if w.iter().all(|x| *x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_gae = 0.0f64;
    let mut n_seq = 0;
    for len in 1..=16 {
        for _ in 0..300 {
            let r: Vec<f64> = (0..len).map(|_| normal(&mut rng)).collect();
            let v: Vec<f64> = (0..len).map(|_| normal(&mut rng)).collect();
            let d: Vec<bool> = (0..len).map(|_| rng.random_bool(0.2)).collect();
            let (gamma, lambda, boot) = (rng.random::<f64>(), rng.random::<f64>(), normal(&mut rng));
            let (adv, ret) = gae(&r, &v, &d, gamma, lambda, boot);
            for (t, want) in gae_expansion(&r, &v, &d, gamma, lambda, boot).into_iter().enumerate() {
                worst_gae = worst_gae.max((adv[t] - want).abs()).max((ret[t] - (want + v[t])).abs());
            }
            n_seq += 1;
        }
    }
    if worst_gae >= ORACLE_TOL {
        return Err(format!("GAE differs from expansion by {worst_gae:e}"));
    }

    let mut worst_mass = 0.0f64;
    let mut n_mdp = 0;
    for n_s in 1..=3 {
        for n_a in 1..=2 {
            for horizon in 1..=4 {
                for _ in 0..10 {
                    let transitions: Vec<f64> = (0..n_s * n_a).flat_map(|_| random_simplex(&mut rng, n_s)).collect();
                    let initial = random_simplex(&mut rng, n_s);
                    let mdp = ChainMdp::new(n_s, n_a, transitions, vec![0.0; n_s * n_a], initial, horizon).unwrap();
                    let policy: Vec<Vec<f64>> = (0..n_s).map(|_| random_simplex(&mut rng, n_a)).collect();
                    let mut total = 0.0;
                    for states in enumerate(horizon + 1, n_s) {
                        for actions in enumerate(horizon, n_a) {
                            total += trajectory_probability(&mdp, &policy, &Trajectory { states: states.clone(), actions }).unwrap();
                        }
                    }
                    worst_mass = worst_mass.max((total - 1.0).abs());
                    n_mdp += 1;
                }
            }
        }
    }
    if worst_mass >= ORACLE_TOL {
        return Err(format!("trajectory mass off by {worst_mass:e}"));
    }
    Ok(format!("GAE max err {worst_gae:.1e} over {n_seq} sequences; trajectory mass max err {worst_mass:.1e} over {n_mdp} MDPs"))
}

fn cartpole_solves(schedule: &Schedule, budget: u64, label: &str) -> Outcome {
    let config = PpoConfig::for_env(EnvId::CartPole);
    let mut solved = 0;
    let mut detail = Vec::new();
    for seed in SEEDS {
        let log = train(EnvId::CartPole, schedule, &config, seed, budget).map_err(|e| format!("seed {seed}: {e}"))?;
        match log.solved_at(SOLVE_WINDOW, SOLVE_THRESHOLD) {
            Some(step) if step <= budget => {
                solved += 1;
                detail.push(format!("seed {seed} at {step}"));
            }
            _ => detail.push(format!("seed {seed} unsolved{}", if log.diverged { " (diverged)" } else { "" })),
        }
    }
    let msg = format!("{label}: {solved}/3 seeds reach trailing-100 >= 195 within {budget} steps [{}]", detail.join(", "));
    if solved >= 2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn cartpole_fixed() -> Outcome {
    let s = Schedule::new(SchedulePolicy::constant(1e-3).unwrap(), MomentumCycle::fixed(0.9)).unwrap();
    cartpole_solves(&s, 200_000, "constant 1e-3")
}

fn cartpole_cyclical() -> Outcome {
    let s = Schedule::new(general_triangular(), MomentumCycle::cycling()).unwrap();
    cartpole_solves(&s, 400_000, "triangular 1e-4..1e-2, s=2000, momentum 1.0..0.8")
}

fn high_lr_divergence() -> Outcome {
    let r = lr_find(EnvId::CartPole, 1e-5, 1e-1, 200, 0, &PpoConfig::for_env(EnvId::CartPole)).map_err(|e| e.to_string())?;
    let last = r.points.last().map(|p| p.lr).unwrap_or(f64::NAN);
    let msg = format!("{} of 200 updates, last lr {last:.3e}: {}", r.points.len(), r.reason.as_deref().unwrap_or("no divergence"));
    if r.diverged {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let cases = [
        (EnvId::CartPole, Schedule::new(general_triangular(), MomentumCycle::cycling()).unwrap(), 7, 60_000),
        (
            EnvId::Pendulum,
            Schedule::new(SchedulePolicy::exp_range(1e-4, 1e-2, 50, 0.99).unwrap(), MomentumCycle::cycling()).unwrap(),
            3,
            20_000,
        ),
        (EnvId::Chain, Schedule::new(SchedulePolicy::constant(3e-3).unwrap(), MomentumCycle::fixed(0.9)).unwrap(), 11, 20_000),
    ];
    let mut bytes = 0;
    for (env, schedule, seed, steps) in cases {
        let config = PpoConfig::for_env(env);
        let a = train(env, &schedule, &config, seed, steps).map_err(|e| e.to_string())?.data_rows();
        let b = train(env, &schedule, &config, seed, steps).map_err(|e| e.to_string())?.data_rows();
        if a != b {
            return Err(format!("{env} seed {seed}: data rows differ"));
        }
        bytes += a.len();
    }
    Ok(format!("cartpole, pendulum, chain re-runs byte-identical ({bytes} bytes of rows)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("schedule exactness", schedule_exactness),
        ("exp_range envelope", exp_range_envelope),
        ("momentum anti-cycling", momentum_anti_cycling),
        ("gradient correctness", gradient_correctness),
        ("oracle equivalence", oracle_equivalence),
        ("cartpole fixed lr", cartpole_fixed),
        ("cartpole cyclical", cartpole_cyclical),
        ("high-lr divergence", high_lr_divergence),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("acceptance {} {name}: PASS ({d}) [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("acceptance {} {name}: FAIL ({d}) [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
