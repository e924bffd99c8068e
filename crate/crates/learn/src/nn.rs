//! Fully connected networks with hand-written reverse mode and Adam.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("expected input of length {want}, got {got}")]
    Shape { want: usize, got: usize },
    #[error("parameter vector has {got} entries, layout needs {want}")]
    ParamCount { want: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Offset of the row-major `outputs × inputs` weight block; biases follow.
    offset: usize,
}

/// Dot product with independent partial sums, which lets the compiler
/// vectorize; summation order is fixed, so results are reproducible.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Multilayer perceptron with tanh hidden units and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

/// Activations kept by [`Mlp::forward_cached`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Cache {
    /// `acts[0]` is the input, `acts[k]` the output of layer `k - 1`.
    acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Mlp {
    /// All-zero network with the given layer widths.
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "bad layer sizes {sizes:?}");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for w in sizes.windows(2) {
            layers.push(Layer { inputs: w[0], outputs: w[1], offset });
            offset += w[0] * w[1] + w[1];
        }
        Self { sizes: sizes.to_vec(), layers, params: vec![0.0; offset] }
    }

    /// Uniform fan-in initialization `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for l in net.layers.clone() {
            let bound = 1.0 / (l.inputs as f64).sqrt();
            for p in &mut net.params[l.offset..l.offset + l.inputs * l.outputs + l.outputs] {
                *p = rng.random_range(-bound..bound);
            }
        }
        net
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes);
        if params.len() != net.params.len() {
            return Err(NnError::ParamCount { want: net.params.len(), got: params.len() });
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn check(&self, x: &[f64]) -> Result<(), NnError> {
        if x.len() != self.input_len() {
            return Err(NnError::Shape { want: self.input_len(), got: x.len() });
        }
        Ok(())
    }

    fn layer_forward(&self, l: &Layer, x: &[f64], out: &mut Vec<f64>, hidden: bool) {
        let w = &self.params[l.offset..l.offset + l.inputs * l.outputs];
        let b = &self.params[l.offset + l.inputs * l.outputs..l.offset + l.inputs * l.outputs + l.outputs];
        out.clear();
        for (row, bias) in w.chunks_exact(l.inputs).zip(b) {
            let z = bias + dot(row, x);
            out.push(if hidden { z.tanh() } else { z });
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            self.layer_forward(l, &cur, &mut next, k < last);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn forward_cached(&self, x: &[f64], cache: &mut Cache) -> Result<(), NnError> {
        self.check(x)?;
        let n = self.layers.len();
        cache.acts.resize_with(n + 1, Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        for k in 0..n {
            let (head, tail) = cache.acts.split_at_mut(k + 1);
            self.layer_forward(&self.layers[k], &head[k], &mut tail[0], k + 1 < n);
        }
        Ok(())
    }

    /// Accumulates `d loss / d params` into `grads` and returns
    /// `d loss / d input`, given `d loss / d output`.
    pub fn backward(&self, cache: &Cache, out_grad: &[f64], grads: &mut [f64]) -> Vec<f64> {
        assert_eq!(out_grad.len(), self.output_len());
        assert_eq!(grads.len(), self.params.len());
        let n = self.layers.len();
        let mut delta = out_grad.to_vec();
        for k in (0..n).rev() {
            let l = &self.layers[k];
            if k + 1 < n {
                // through tanh: d/dz = 1 - a^2
                for (d, a) in delta.iter_mut().zip(&cache.acts[k + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let x = &cache.acts[k];
            let wlen = l.inputs * l.outputs;
            let (gw, gb) = grads[l.offset..l.offset + wlen + l.outputs].split_at_mut(wlen);
            for (o, d) in delta.iter().enumerate() {
                gb[o] += d;
                for (g, xi) in gw[o * l.inputs..(o + 1) * l.inputs].iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
            let w = &self.params[l.offset..l.offset + wlen];
            let mut prev = vec![0.0; l.inputs];
            for (o, d) in delta.iter().enumerate() {
                for (p, wi) in prev.iter_mut().zip(&w[o * l.inputs..(o + 1) * l.inputs]) {
                    *p += d * wi;
                }
            }
            delta = prev;
        }
        delta
    }

    /// `self ← (1 - tau) self + tau source`.
    pub fn soft_update(&mut self, source: &Mlp, tau: f64) {
        assert_eq!(self.sizes, source.sizes);
        for (t, s) in self.params.iter_mut().zip(&source.params) {
            *t = (1.0 - tau) * *t + tau * s;
        }
    }
}

/// First/second-moment state of the Adam update.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) {
        assert!(params.len() == self.m.len() && grads.len() == self.m.len());
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Central-difference gradient of `loss(net(x))` with respect to every
/// parameter, for checking [`Mlp::backward`].
pub fn numeric_param_grad(net: &Mlp, x: &[f64], loss: impl Fn(&[f64]) -> f64, eps: f64) -> Vec<f64> {
    let mut probe = net.clone();
    (0..net.num_params())
        .map(|i| {
            let p0 = net.params[i];
            probe.params[i] = p0 + eps;
            let up = loss(&probe.forward(x).unwrap());
            probe.params[i] = p0 - eps;
            let down = loss(&probe.forward(x).unwrap());
            probe.params[i] = p0;
            (up - down) / (2.0 * eps)
        })
        .collect()
}
