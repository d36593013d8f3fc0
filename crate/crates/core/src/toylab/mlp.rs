//! A small fully connected regressor with hand-written backpropagation.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (`out x in`, row-major) followed by the bias. Fixed (untrained) input and
//! output scales wrap the network: `f(x) = out_scale * net(in_scale * x)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::synth::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    sizes: Vec<usize>,
    params: Vec<f64>,
    input_scale: f64,
    output_scale: f64,
}

/// Activations recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[0]` is the scaled input, the last entry the scaled output.
    pub activations: Vec<Vec<f64>>,
    /// Pre-activation values of every non-input layer.
    pub preacts: Vec<Vec<f64>>,
}

impl MlpModel {
    /// The toy regressor: 1 -> 64 -> 64 -> 2.
    pub const TOY_SIZES: [usize; 4] = [1, 64, 64, 2];

    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need input and output layers");
        let n = Self::param_count_for(sizes);
        Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; n],
            input_scale: 1.0,
            output_scale: 1.0,
        }
    }

    /// He-uniform weights and zero biases.
    pub fn init(sizes: &[usize], seed: u64) -> Self {
        let mut model = Self::zeros(sizes);
        let mut rng = rng(seed);
        let mut off = 0;
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            for p in &mut model.params[off..off + fan_in * fan_out] {
                *p = rng.random_range(-limit..limit);
            }
            off += fan_in * fan_out + fan_out;
        }
        model
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || params.len() != Self::param_count_for(sizes) {
            return Err(Error::Shape(format!(
                "{} parameters for layer sizes {sizes:?}",
                params.len()
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
            input_scale: 1.0,
            output_scale: 1.0,
        })
    }

    pub fn with_scales(mut self, input_scale: f64, output_scale: f64) -> Self {
        self.input_scale = input_scale;
        self.output_scale = output_scale;
        self
    }

    pub fn scales(&self) -> (f64, f64) {
        (self.input_scale, self.output_scale)
    }

    fn param_count_for(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.params.iter().position(|p| !p.is_finite()) {
            Some(i) => Err(Error::NonFinite(format!("model parameter {i}"))),
            None => Ok(()),
        }
    }

    pub fn forward_trace(&self, input: &[f64]) -> ForwardTrace {
        assert_eq!(input.len(), self.sizes[0], "input width");
        let layers = self.sizes.len() - 1;
        let mut activations = Vec::with_capacity(layers + 1);
        let mut preacts = Vec::with_capacity(layers);
        activations.push(input.iter().map(|v| v * self.input_scale).collect());
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let a = &activations[l];
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    b[o] + row.iter().zip(a).map(|(wi, ai)| wi * ai).sum::<f64>()
                })
                .collect();
            let out = if l + 1 < layers {
                z.iter().map(|&v| v.max(0.0)).collect()
            } else {
                z.iter().map(|&v| v * self.output_scale).collect()
            };
            preacts.push(z);
            activations.push(out);
            off += n_in * n_out + n_out;
        }
        ForwardTrace { activations, preacts }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_trace(input).activations.pop().expect("output layer")
    }

    /// Adds `d loss / d params` for one sample into `grad`, given the gradient
    /// of the loss with respect to the network output.
    pub fn accumulate_grad(&self, trace: &ForwardTrace, output_grad: &[f64], grad: &mut [f64]) {
        let layers = self.sizes.len() - 1;
        assert_eq!(output_grad.len(), self.sizes[layers], "output width");
        assert_eq!(grad.len(), self.params.len(), "gradient buffer");
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }

        let mut delta: Vec<f64> = output_grad.iter().map(|g| g * self.output_scale).collect();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            if l + 1 < layers {
                for (d, &z) in delta.iter_mut().zip(&trace.preacts[l]) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let a = &trace.activations[l];
            for o in 0..n_out {
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, &ai) in row.iter_mut().zip(a) {
                    *g += delta[o] * ai;
                }
                grad[off + n_in * n_out + o] += delta[o];
            }
            if l > 0 {
                let w = &self.params[off..off + n_in * n_out];
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    for (p, &wi) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *p += delta[o] * wi;
                    }
                }
                delta = prev;
            }
        }
    }

    /// Parameter gradient for a single input.
    pub fn grad(&self, input: &[f64], output_grad: &[f64]) -> Result<Vec<f64>> {
        self.check_finite()?;
        if input.iter().chain(output_grad).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mlp input or output gradient".into()));
        }
        let trace = self.forward_trace(input);
        let mut g = vec![0.0; self.params.len()];
        self.accumulate_grad(&trace, output_grad, &mut g);
        Ok(g)
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(&mut self.v)) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}
