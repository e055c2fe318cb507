//! Multilayer perceptrons with explicit forward and backward passes.
//!
//! Parameters are exposed as one flat vector in layer order (each layer's
//! row-major weight matrix followed by its bias). Gradients use the same layout.

use crate::error::{contract, Result};
use crate::numerics::rng::RngStream;
use crate::numerics::tensor::Tensor;

/// Sigmoid outputs are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }

    fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Relu => a.max(0.0),
            Activation::Linear => a,
            Activation::Sigmoid => sigmoid(a).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP),
        }
    }

    /// Derivative given pre-activation `a` and output `y`.
    fn derivative(self, a: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
            Activation::Sigmoid => {
                if y <= PROB_CLAMP || y >= 1.0 - PROB_CLAMP {
                    0.0
                } else {
                    y * (1.0 - y)
                }
            }
        }
    }
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    weights: Tensor,
    bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
    hidden: Activation,
    output: Activation,
    generation: u64,
}

/// Everything `backward` needs from a `forward` call.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layer_sizes: Vec<usize>,
    generation: u64,
    /// `inputs[l]` is the input to layer `l`.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl NetworkModel {
    /// All-zero parameters.
    pub fn zeros(layer_sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&s| s == 0) {
            return Err(contract(format!(
                "layer sizes must list at least two positive sizes, got {layer_sizes:?}"
            )));
        }
        let layers = layer_sizes
            .windows(2)
            .map(|w| Layer {
                weights: Tensor::zeros(vec![w[1], w[0]]),
                bias: Tensor::zeros(vec![w[1]]),
            })
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            hidden,
            output,
            generation: 0,
        })
    }

    /// He initialization: weights ~ N(0, 2/fan_in), zero biases.
    pub fn new(
        layer_sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let mut model = Self::zeros(layer_sizes, hidden, output)?;
        for layer in &mut model.layers {
            let fan_in = layer.weights.shape()[1] as f64;
            let std = (2.0 / fan_in).sqrt();
            for w in layer.weights.data_mut() {
                *w = rng.normal(0.0, std);
            }
        }
        Ok(model)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(l.bias.data());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(contract(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(contract("non-finite parameter"));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let n = l.weights.len();
            l.weights
                .data_mut()
                .copy_from_slice(&params[offset..offset + n]);
            offset += n;
            let n = l.bias.len();
            l.bias
                .data_mut()
                .copy_from_slice(&params[offset..offset + n]);
            offset += n;
        }
        self.generation += 1;
        Ok(())
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Output only, without keeping a cache.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        for (i, l) in self.layers.iter().enumerate() {
            let act = self.activation_for(i);
            let mut a = l.weights.matvec(&x)?;
            for (v, b) in a.iter_mut().zip(l.bias.data()) {
                *v = act.apply(*v + b);
            }
            x = a;
        }
        Ok(x)
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for (i, l) in self.layers.iter().enumerate() {
            let act = self.activation_for(i);
            let mut a = l.weights.matvec(&x)?;
            for (v, b) in a.iter_mut().zip(l.bias.data()) {
                *v += b;
            }
            let y: Vec<f64> = a.iter().map(|&v| act.apply(v)).collect();
            inputs.push(std::mem::replace(&mut x, y));
            pre.push(a);
        }
        let cache = ForwardCache {
            layer_sizes: self.layer_sizes.clone(),
            generation: self.generation,
            inputs,
            pre,
            output: x.clone(),
        };
        Ok((x, cache))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(contract(format!(
                "network expects {} inputs, got {}",
                self.input_size(),
                input.len()
            )));
        }
        Ok(())
    }

    /// Gradients of a scalar objective with respect to every parameter and the input,
    /// given its gradient with respect to the network output.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut grads = vec![0.0; self.num_params()];
        let input_grad = self.backward_into(cache, output_grad, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`backward`](Self::backward) but adds parameter gradients into `acc`.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        acc: &mut [f64],
    ) -> Result<Vec<f64>> {
        if cache.layer_sizes != self.layer_sizes || cache.generation != self.generation {
            return Err(contract(
                "forward cache does not belong to this model state",
            ));
        }
        if output_grad.len() != self.output_size() {
            return Err(contract(format!(
                "output gradient has {} entries, network has {} outputs",
                output_grad.len(),
                self.output_size()
            )));
        }
        if acc.len() != self.num_params() {
            return Err(contract("gradient accumulator has wrong length"));
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.weights.len() + l.bias.len();
        }

        let mut upstream = output_grad.to_vec();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let act = self.activation_for(i);
            let post_out: &[f64] = if i + 1 == self.layers.len() {
                &cache.output
            } else {
                &cache.inputs[i + 1]
            };
            let delta: Vec<f64> = upstream
                .iter()
                .zip(&cache.pre[i])
                .zip(post_out)
                .map(|((g, &a), &y)| g * act.derivative(a, y))
                .collect();
            let x = &cache.inputs[i];
            let cols = x.len();
            let base = offsets[i];
            let (w_acc, rest) = acc[base..].split_at_mut(l.weights.len());
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (g, xv) in w_acc[r * cols..(r + 1) * cols].iter_mut().zip(x) {
                    *g += d * xv;
                }
                rest[r] += d;
            }
            upstream = l.weights.matvec_t(&delta)?;
        }
        Ok(upstream)
    }
}
