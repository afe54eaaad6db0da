use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense layer; `weight` is `out x inp`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inp: usize,
    pub out: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inp: usize, out: usize) -> Self {
        Layer { inp, out, weight: vec![0.0; inp * out], bias: vec![0.0; out] }
    }

    fn n_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn affine(&self, x: &[f64], y: &mut Vec<f64>) {
        y.clear();
        for (row, b) in self.weight.chunks_exact(self.inp).zip(&self.bias) {
            let dot: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            y.push(dot + b);
        }
    }
}

/// Feed-forward network: tanh on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Per-layer activations recorded by [`Mlp::forward_cached`].
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`.
    acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Mlp {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].out != pair[1].inp {
                return Err(Error::ShapeMismatch { expected: pair[0].out, actual: pair[1].inp });
            }
        }
        for l in &layers {
            if l.weight.len() != l.inp * l.out {
                return Err(Error::ShapeMismatch { expected: l.inp * l.out, actual: l.weight.len() });
            }
            if l.bias.len() != l.out {
                return Err(Error::ShapeMismatch { expected: l.out, actual: l.bias.len() });
            }
        }
        if !layers.iter().flat_map(|l| l.weight.iter().chain(&l.bias)).all(|v| v.is_finite()) {
            return Err(Error::config("network parameters must be finite"));
        }
        Ok(Mlp { layers })
    }

    /// All-zero network with the given layer widths (`sizes[0]` is the input).
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::config("network needs an input and an output width"));
        }
        Self::from_layers(sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect())
    }

    /// Orthogonal initialization: hidden layers scaled by `hidden_gain`, the
    /// output layer by `output_gain`, biases zero.
    pub fn orthogonal<R: Rng + ?Sized>(sizes: &[usize], hidden_gain: f64, output_gain: f64, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let n = net.layers.len();
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let gain = if i + 1 == n { output_gain } else { hidden_gain };
            layer.weight = orthogonal_matrix(layer.out, layer.inp, gain, rng);
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inp
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Layer::n_params).sum()
    }

    /// Flattened parameters: per layer, the weight (row-major) then the bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weight);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::ShapeMismatch { expected: self.n_params(), actual: flat.len() });
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weight.len();
            l.weight.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.acts.pop().unwrap_or_default())
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), actual: input.len() });
        }
        let n = self.layers.len();
        let mut acts = Vec::with_capacity(n + 1);
        acts.push(input.to_vec());
        for (i, l) in self.layers.iter().enumerate() {
            let mut y = Vec::with_capacity(l.out);
            l.affine(&acts[i], &mut y);
            if i + 1 < n {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(y);
        }
        Ok(ForwardCache { acts })
    }

    /// Gradient of `output . upstream` with respect to every parameter, in
    /// [`Mlp::params`] order.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let cache = self.forward_cached(input)?;
        let mut grads = vec![0.0; self.n_params()];
        self.backward_accumulate(&cache, upstream, 1.0, &mut grads)?;
        Ok(grads)
    }

    /// Adds `scale * d(output . upstream)/d(params)` into `grads`.
    pub fn backward_accumulate(&self, cache: &ForwardCache, upstream: &[f64], scale: f64, grads: &mut [f64]) -> Result<()> {
        if upstream.len() != self.output_dim() {
            return Err(Error::ShapeMismatch { expected: self.output_dim(), actual: upstream.len() });
        }
        if grads.len() != self.n_params() {
            return Err(Error::ShapeMismatch { expected: self.n_params(), actual: grads.len() });
        }
        if cache.acts.len() != self.layers.len() + 1 {
            return Err(Error::ShapeMismatch { expected: self.layers.len() + 1, actual: cache.acts.len() });
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.n_params();
        }

        // delta = d(loss)/d(pre-activation) of the current layer
        let mut delta: Vec<f64> = upstream.iter().map(|g| g * scale).collect();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            let x = &cache.acts[i];
            let base = offsets[i];
            let (gw, gb) = grads[base..base + l.n_params()].split_at_mut(l.weight.len());
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut gw[o * l.inp..(o + 1) * l.inp];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += d * xi;
                }
                gb[o] += d;
            }
            if i > 0 {
                // Back through W, then through tanh of the previous layer.
                let mut prev = vec![0.0; l.inp];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &l.weight[o * l.inp..(o + 1) * l.inp];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                for (p, a) in prev.iter_mut().zip(x) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
        Ok(())
    }
}

/// `rows x cols` matrix with orthonormal rows or columns (whichever are
/// fewer), scaled by `gain`.
fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    // Orthonormalize the shorter side with modified Gram-Schmidt on a
    // Gaussian draw.
    let (n_vec, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(n_vec);
    while vecs.len() < n_vec {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for u in &vecs {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        vecs.push(v);
    }
    let mut m = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            m[r * cols + c] = gain * if rows <= cols { vecs[r][c] } else { vecs[c][r] };
        }
    }
    m
}
