//! Plain-text parameter checkpoints.
//!
//! ```text
//! mlp 2                 # number of layers
//! layer 4 64            # input width, output width
//! <64 lines of 4 weights, row-major>
//! bias <64 values>
//! layer 64 2
//! ...
//! log_std <values>      # optional, Gaussian policies only
//! ```
//!
//! Values are whitespace separated and written with round-trip precision.

use std::fmt::Write as _;
use std::path::Path;

use super::mlp::{Layer, Mlp};
use crate::error::{Error, Result};

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v:?}").unwrap();
    }
    s
}

pub fn encode(net: &Mlp, log_std: Option<&[f64]>) -> String {
    let mut out = format!("mlp {}\n", net.layers().len());
    for l in net.layers() {
        writeln!(out, "layer {} {}", l.inp, l.out).unwrap();
        for row in l.weight.chunks_exact(l.inp) {
            out.push_str(&join(row));
            out.push('\n');
        }
        writeln!(out, "bias {}", join(&l.bias)).unwrap();
    }
    if let Some(ls) = log_std {
        writeln!(out, "log_std {}", join(ls)).unwrap();
    }
    out
}

pub fn decode(text: &str, path: &Path) -> Result<(Mlp, Option<Vec<f64>>)> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| lines.next().ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")));
    let floats = |line: usize, s: &str| -> Result<Vec<f64>> {
        s.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| err(line, format!("bad number `{t}`: {e}")))).collect()
    };

    let (ln, head) = next("header")?;
    let n_layers: usize =
        head.strip_prefix("mlp ").and_then(|n| n.trim().parse().ok()).ok_or_else(|| err(ln, "expected `mlp <n_layers>`".into()))?;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let (ln, l) = next("layer header")?;
        let dims: Vec<usize> =
            l.strip_prefix("layer ").map(|d| d.split_whitespace().filter_map(|t| t.parse().ok()).collect()).unwrap_or_default();
        if dims.len() != 2 {
            return Err(err(ln, "expected `layer <in> <out>`".into()));
        }
        let (inp, out) = (dims[0], dims[1]);
        let mut weight = Vec::with_capacity(inp * out);
        for _ in 0..out {
            let (ln, row) = next("weight row")?;
            let vals = floats(ln, row)?;
            if vals.len() != inp {
                return Err(err(ln, format!("expected {inp} weights, found {}", vals.len())));
            }
            weight.extend(vals);
        }
        let (ln, b) = next("bias")?;
        let bias = floats(ln, b.strip_prefix("bias").ok_or_else(|| err(ln, "expected `bias ...`".into()))?)?;
        if bias.len() != out {
            return Err(err(ln, format!("expected {out} biases, found {}", bias.len())));
        }
        layers.push(Layer { inp, out, weight, bias });
    }
    let log_std = match lines.next() {
        None => None,
        Some((ln, l)) => Some(floats(ln, l.strip_prefix("log_std").ok_or_else(|| err(ln, "expected `log_std ...`".into()))?)?),
    };
    Ok((Mlp::from_layers(layers)?, log_std))
}

pub fn save(path: &Path, net: &Mlp, log_std: Option<&[f64]>) -> Result<()> {
    crate::harness::write_atomic(path, encode(net, log_std).as_bytes())
}

pub fn load(path: &Path) -> Result<(Mlp, Option<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode(&text, path)
}
