//! Standalone SVG line plots of run logs and learning-rate sweeps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::lrfind::LrFindResult;
use super::runlog::RunLog;
use super::write_atomic;
use crate::error::{Error, Result};

pub const REWARD_SMOOTHING: usize = 20;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 90.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#2ecc71", "#00bfff", "#8e44ad", "#e67e22", "#e74c3c", "#34495e", "#f1c40f", "#16a085"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Reward,
    Schedule,
    LrFind,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reward" => Ok(PlotKind::Reward),
            "schedule" => Ok(PlotKind::Schedule),
            "lrfind" | "lr-find" => Ok(PlotKind::LrFind),
            other => Err(Error::config(format!("unknown plot kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Left,
    Right,
}

#[derive(Debug, Clone)]
struct Series {
    label: String,
    color: &'static str,
    axis: Axis,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

/// Trailing mean over at most `window` values.
pub fn trailing_mean(values: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

fn bounds(series: &[Series], axis: Axis, log_x: bool) -> ((f64, f64), (f64, f64)) {
    let pts = series.iter().filter(|s| s.axis == axis).flat_map(|s| s.points.iter());
    let all_x = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let fx = |x: f64| if log_x { x.log10() } else { x };
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in all_x.map(fx).filter(|x| x.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
    }
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, y) in pts.filter(|p| p.1.is_finite()) {
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let fix = |lo: f64, hi: f64| {
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if lo == hi {
            (lo - 0.5 * lo.abs().max(1e-12), hi + 0.5 * hi.abs().max(1e-12))
        } else {
            (lo, hi)
        }
    };
    (fix(x0, x1), fix(y0, y1))
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{:.4}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn render(title: &str, x_label: &str, y_label: &str, y2_label: Option<&str>, log_x: bool, series: &[Series]) -> String {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let ((x0, x1), (y0, y1)) = bounds(series, Axis::Left, log_x);
    let (_, (r0, r1)) = bounds(series, Axis::Right, log_x);
    let fx = |x: f64| if log_x { x.log10() } else { x };
    let sx = |x: f64| LEFT + (fx(x) - x0) / (x1 - x0) * pw;
    let sy = |y: f64, axis: Axis| {
        let (lo, hi) = if axis == Axis::Left { (y0, y1) } else { (r0, r1) };
        TOP + ph - (y - lo) / (hi - lo) * ph
    };

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();
    writeln!(s, r#"<g id="axes" stroke="black" fill="none">"#).unwrap();
    writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/>"#).unwrap();
    writeln!(s, "</g>").unwrap();
    writeln!(s, r#"<g id="ticks" fill="black">"#).unwrap();
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let xv = x0 + f * (x1 - x0);
        let xs = LEFT + f * pw;
        let label = if log_x { format!("1e{:.1}", xv) } else { fmt_tick(xv) };
        writeln!(s, r#"<line x1="{xs:.2}" y1="{}" x2="{xs:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0).unwrap();
        writeln!(s, r#"<text x="{xs:.2}" y="{}" text-anchor="middle">{label}</text>"#, TOP + ph + 18.0).unwrap();
        let yv = y0 + f * (y1 - y0);
        let ys = TOP + ph - f * ph;
        writeln!(s, r#"<line x1="{}" y1="{ys:.2}" x2="{LEFT}" y2="{ys:.2}" stroke="black"/>"#, LEFT - 5.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, ys + 4.0, fmt_tick(yv)).unwrap();
        if y2_label.is_some() {
            let rv = r0 + f * (r1 - r0);
            writeln!(s, r#"<line x1="{}" y1="{ys:.2}" x2="{}" y2="{ys:.2}" stroke="black"/>"#, LEFT + pw, LEFT + pw + 5.0).unwrap();
            writeln!(s, r#"<text x="{}" y="{:.2}">{}</text>"#, LEFT + pw + 8.0, ys + 4.0, fmt_tick(rv)).unwrap();
        }
    }
    writeln!(s, "</g>").unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, escape(x_label)).unwrap();
    writeln!(s, r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#, TOP + ph / 2.0, escape(y_label))
        .unwrap();
    if let Some(l) = y2_label {
        writeln!(
            s,
            r#"<text x="{0}" y="{1}" text-anchor="middle" transform="rotate(90 {0} {1})">{2}</text>"#,
            WIDTH - 20.0,
            TOP + ph / 2.0,
            escape(l)
        )
        .unwrap();
    }

    writeln!(s, r#"<g id="series" fill="none" stroke-width="1.5">"#).unwrap();
    for se in series {
        let pts: Vec<String> = se
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite() && (!log_x || p.0 > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y, se.axis)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let dash = if se.dashed { r#" stroke-dasharray="6 3""# } else { "" };
        writeln!(s, r#"<polyline stroke="{}"{dash} points="{}"/>"#, se.color, pts.join(" ")).unwrap();
    }
    writeln!(s, "</g>").unwrap();

    writeln!(s, r#"<g id="legend">"#).unwrap();
    for (i, se) in series.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let dash = if se.dashed { r#" stroke-dasharray="6 3""# } else { "" };
        writeln!(s, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"{dash}/>"#, LEFT + 10.0, LEFT + 34.0, se.color)
            .unwrap();
        writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, LEFT + 40.0, y + 4.0, escape(&se.label)).unwrap();
    }
    writeln!(s, "</g>").unwrap();
    s.push_str("</svg>\n");
    s
}

fn label_for(log: &RunLog, logs: &[RunLog]) -> String {
    let arm = if log.arm.is_empty() { "run" } else { log.arm.as_str() };
    if logs.iter().filter(|l| l.arm == log.arm).count() > 1 {
        format!("{arm} (seed {})", log.seed)
    } else {
        arm.to_string()
    }
}

/// Episode reward against environment steps, smoothed by a trailing mean.
pub fn reward_svg(logs: &[RunLog]) -> String {
    let series: Vec<Series> = logs
        .iter()
        .enumerate()
        .map(|(i, log)| {
            let eps = log.episode_rewards();
            let rewards: Vec<f64> = eps.iter().map(|e| e.1).collect();
            let smooth = trailing_mean(&rewards, REWARD_SMOOTHING);
            Series {
                label: label_for(log, logs),
                color: PALETTE[i % PALETTE.len()],
                axis: Axis::Left,
                dashed: false,
                points: eps.iter().zip(smooth).map(|(e, m)| (e.0 as f64, m)).collect(),
            }
        })
        .collect();
    render("Episode reward", "environment steps", "episode reward (20-episode mean)", None, false, &series)
}

/// Learning rate (left axis) and momentum (right axis, dashed) per update.
pub fn schedule_svg(logs: &[RunLog]) -> String {
    let mut series = Vec::new();
    for (i, log) in logs.iter().enumerate() {
        let mut pts: Vec<(u64, f64, f64)> = Vec::new();
        for r in &log.rows {
            if pts.last().map(|p| p.0) != Some(r.update_index) {
                pts.push((r.update_index, r.lr, r.momentum));
            }
        }
        let color = PALETTE[i % PALETTE.len()];
        let label = label_for(log, logs);
        series.push(Series {
            label: format!("{label} lr"),
            color,
            axis: Axis::Left,
            dashed: false,
            points: pts.iter().map(|p| (p.0 as f64, p.1)).collect(),
        });
        series.push(Series {
            label: format!("{label} momentum"),
            color,
            axis: Axis::Right,
            dashed: true,
            points: pts.iter().map(|p| (p.0 as f64, p.2)).collect(),
        });
    }
    render("Learning-rate schedule", "update", "learning rate", Some("momentum"), false, &series)
}

/// Loss against learning rate on a log-scaled axis.
pub fn lrfind_svg(results: &[LrFindResult]) -> String {
    let series: Vec<Series> = results
        .iter()
        .enumerate()
        .map(|(i, r)| Series {
            label: format!("{} seed {}{}", r.env, r.seed, if r.diverged { " (diverged)" } else { "" }),
            color: PALETTE[i % PALETTE.len()],
            axis: Axis::Left,
            dashed: false,
            points: r.points.iter().map(|p| (p.lr, p.total_loss)).collect(),
        })
        .collect();
    render("Learning-rate range test", "learning rate (log10)", "total loss", None, true, &series)
}

/// Reads the inputs, renders and writes `out`.
pub fn emit_plot(inputs: &[PathBuf], kind: PlotKind, out: &Path) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::config("plot needs at least one input file"));
    }
    let svg = match kind {
        PlotKind::Reward | PlotKind::Schedule => {
            let logs = inputs.iter().map(|p| RunLog::read(p)).collect::<Result<Vec<_>>>()?;
            if kind == PlotKind::Reward {
                reward_svg(&logs)
            } else {
                schedule_svg(&logs)
            }
        }
        PlotKind::LrFind => {
            let rs = inputs
                .iter()
                .map(|p| {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    LrFindResult::parse_csv(&text, p)
                })
                .collect::<Result<Vec<_>>>()?;
            lrfind_svg(&rs)
        }
    };
    write_atomic(out, svg.as_bytes())
}
