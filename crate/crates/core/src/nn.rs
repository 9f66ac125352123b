//! Minimal dense networks with hand-written backpropagation, plus the two
//! optimisers used for pre-training (momentum SGD) and probing (Adam).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" | "none" => Ok(Activation::Identity),
            other => Err(Error::InvalidConfig(format!("unknown activation {other:?}"))),
        }
    }
}

/// Affine layer `y = W·x + b`, weights stored `outputs × inputs` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform init with bound `√(6/fan_in)` for ReLU layers and
    /// `√(6/(fan_in+fan_out))` otherwise. Biases start at zero.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, act: Activation, rng: &mut R) -> Self {
        let bound = match act {
            Activation::Relu => (6.0 / inputs as f64).sqrt(),
            Activation::Identity => (6.0 / (inputs + outputs) as f64).sqrt(),
        };
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-bound..bound)).collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut dx = vec![0.0; self.inputs];
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias[o] += g;
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut grad.weights[o * self.inputs..(o + 1) * self.inputs];
            for i in 0..self.inputs {
                grow[i] += g * x[i];
                dx[i] += g * row[i];
            }
        }
        dx
    }
}

/// Stack of dense layers; `activations[l]` follows layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activations: Vec<Activation>,
}

/// Per-layer inputs and pre-activations recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    /// Random network with widths `dims[0] → … → dims[last]`.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Self {
        assert_eq!(dims.len(), activations.len() + 1);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &a)| Dense::init(w[0], w[1], a, rng))
            .collect();
        Self {
            layers,
            activations: activations.to_vec(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
            activations: self.activations.clone(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            h = layer.forward(&h);
            h.iter_mut().for_each(|v| *v = act.apply(*v));
        }
        h
    }

    pub fn forward_traced(&self, x: &[f64]) -> (Vec<f64>, Trace) {
        let mut trace = Trace {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.to_vec();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            let pre = layer.forward(&h);
            let out = pre.iter().map(|&v| act.apply(v)).collect();
            trace.inputs.push(h);
            trace.pre.push(pre);
            h = out;
        }
        (h, trace)
    }

    /// Backpropagates `dout` through a traced pass, accumulating into `grad`.
    pub fn backward(&self, trace: &Trace, dout: &[f64], grad: &mut Mlp) -> Vec<f64> {
        let mut d = dout.to_vec();
        for l in (0..self.layers.len()).rev() {
            let act = self.activations[l];
            for (g, &p) in d.iter_mut().zip(&trace.pre[l]) {
                *g *= act.derivative(p);
            }
            d = self.layers[l].backward(&trace.inputs[l], &d, &mut grad.layers[l]);
        }
        d
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// `(name, rows, cols, data)` for each tensor, rows = outputs.
    pub fn named_tensors(&self, prefix: &str) -> Vec<(String, usize, usize, Vec<f64>)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("{prefix}.{i}.weight"), l.outputs, l.inputs, l.weights.clone()));
            out.push((format!("{prefix}.{i}.bias"), l.outputs, 1, l.bias.clone()));
        }
        out
    }
}

/// Momentum SGD with coupled L2 weight decay:
/// `v ← μ·v + (g + λ·w)`, `w ← w − η·v`.
#[derive(Debug, Clone)]
pub struct SgdMomentum {
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<Vec<f64>>,
}

impl SgdMomentum {
    pub fn new(momentum: f64, weight_decay: f64) -> Self {
        Self {
            momentum,
            weight_decay,
            velocity: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>, lr: f64) {
        if self.velocity.is_empty() {
            self.velocity = grads.iter().map(|g| vec![0.0; g.len()]).collect();
        }
        for ((p, g), v) in params.into_iter().zip(grads).zip(&mut self.velocity) {
            for i in 0..p.len() {
                v[i] = self.momentum * v[i] + g[i] + self.weight_decay * p[i];
                p[i] -= lr * v[i];
            }
        }
    }
}

/// Adam with coupled L2 weight decay:
///
/// ```text
/// g ← g + λ·w
/// m ← β₁·m + (1 − β₁)·g          v ← β₂·v + (1 − β₂)·g²
/// m̂ = m / (1 − β₁ᵗ)              v̂ = v / (1 − β₂ᵗ)
/// w ← w − η · m̂ / (√v̂ + ε)
/// ```
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(weight_decay: f64) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>, lr: f64) {
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                let gi = g[i] + self.weight_decay * p[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// Half-cosine decay from `base` at step 0 towards 0 at `total`.
pub fn cosine_lr(base: f64, step: usize, total: usize) -> f64 {
    if total == 0 {
        return base;
    }
    let progress = (step as f64 / total as f64).min(1.0);
    base * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// Linear warm-up over `warmup` steps, then cosine decay over the rest.
pub fn warmup_cosine_lr(base: f64, step: usize, total: usize, warmup: usize) -> f64 {
    if step < warmup {
        base * (step + 1) as f64 / warmup as f64
    } else {
        cosine_lr(base, step - warmup, total.saturating_sub(warmup))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn numeric_grad(net: &Mlp, x: &[f64], target: &[f64]) -> Vec<Vec<f64>> {
        let loss = |n: &Mlp| -> f64 {
            n.forward(x)
                .iter()
                .zip(target)
                .map(|(a, b)| 0.5 * (a - b) * (a - b))
                .sum()
        };
        let h = 1e-6;
        let mut out = Vec::new();
        let mut probe = net.clone();
        let lens: Vec<usize> = net.tensors().iter().map(|t| t.len()).collect();
        for (ti, len) in lens.into_iter().enumerate() {
            let mut g = vec![0.0; len];
            for i in 0..len {
                let orig = probe.tensors()[ti][i];
                probe.tensors_mut()[ti][i] = orig + h;
                let up = loss(&probe);
                probe.tensors_mut()[ti][i] = orig - h;
                let down = loss(&probe);
                probe.tensors_mut()[ti][i] = orig;
                g[i] = (up - down) / (2.0 * h);
            }
            out.push(g);
        }
        out
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = seeded(4);
        let net = Mlp::init(&[5, 7, 3], &[Activation::Relu, Activation::Identity], &mut rng);
        let x = [0.3, -0.8, 1.2, 0.05, -0.4];
        let target = [0.1, 0.0, -0.5];
        let (out, trace) = net.forward_traced(&x);
        let dout: Vec<f64> = out.iter().zip(&target).map(|(a, b)| a - b).collect();
        let mut grad = net.zeros_like();
        net.backward(&trace, &dout, &mut grad);
        for (a, n) in grad.tensors().iter().zip(numeric_grad(&net, &x, &target)) {
            for (ai, ni) in a.iter().zip(n) {
                assert!((ai - ni).abs() < 1e-6 * (1.0 + ni.abs()), "{ai} vs {ni}");
            }
        }
    }

    #[test]
    fn schedules() {
        assert_eq!(cosine_lr(1.0, 0, 10), 1.0);
        assert!(cosine_lr(1.0, 10, 10).abs() < 1e-15);
        assert!((warmup_cosine_lr(1.0, 0, 10, 2) - 0.5).abs() < 1e-15);
        assert_eq!(warmup_cosine_lr(1.0, 2, 10, 2), 1.0);
    }

    #[test]
    fn zero_lr_leaves_params() {
        let mut rng = seeded(2);
        let mut net = Mlp::init(&[3, 2], &[Activation::Identity], &mut rng);
        let before = net.clone();
        let grads = net.zeros_like();
        let mut adam = Adam::new(1e-6);
        adam.step(net.tensors_mut(), grads.tensors(), 0.0);
        let mut sgd = SgdMomentum::new(0.9, 1e-6);
        sgd.step(net.tensors_mut(), grads.tensors(), 0.0);
        assert_eq!(net, before);
    }
}
