//! Feed-forward generator network with weight re-injection.
//!
//! The generator maps a bootstrap weight vector `w` to a parameter draw. The
//! raw input is concatenated to every hidden activation, so layer `l` sees
//! `{g_l(Z_l), w}` rather than `g_l(Z_l)` alone; this keeps variation in `w`
//! flowing to the output even in deeper stacks. The topology is fixed
//! (affine + activation per hidden layer, affine output), which lets the
//! backward pass be written directly instead of through a general autodiff
//! engine.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            // Subgradient at 0 is taken as 0 for ReLU (see `derivative`).
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
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
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-pre).exp());
                s * (1.0 - s)
            }
        }
    }
}

/// Fully-connected generator `G_phi` with weight re-injection.
///
/// Parameters for all affine maps live in one flat vector: for each layer in
/// order, the weight matrix row-major `(out x in)` followed by the bias.
/// Layer 0 takes the raw input; every later layer takes the previous hidden
/// activation concatenated with the raw input; the output layer is affine
/// with no squashing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorNetwork {
    input_dim: usize,
    hidden_widths: Vec<usize>,
    output_dim: usize,
    activation: Activation,
    params: Vec<f64>,
}

/// (input length, output length) of one affine map.
fn layer_dims(input_dim: usize, hidden: &[usize], output_dim: usize) -> Vec<(usize, usize)> {
    let mut dims = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input_dim;
    for &h in hidden {
        dims.push((prev, h));
        prev = h + input_dim;
    }
    dims.push((prev, output_dim));
    dims
}

impl GeneratorNetwork {
    /// Creates a network with all parameters zero.
    pub fn new(
        input_dim: usize,
        hidden_widths: Vec<usize>,
        output_dim: usize,
        activation: Activation,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::invalid("input_dim and output_dim must be positive"));
        }
        if hidden_widths.iter().any(|&h| h == 0) {
            return Err(Error::invalid("hidden widths must be positive"));
        }
        let count = layer_dims(input_dim, &hidden_widths, output_dim)
            .iter()
            .map(|&(i, o)| (i + 1) * o)
            .sum();
        Ok(Self {
            input_dim,
            hidden_widths,
            output_dim,
            activation,
            params: vec![0.0; count],
        })
    }

    /// Xavier-uniform initialization: each affine map gets weights from
    /// `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`; biases stay zero.
    pub fn initialize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let dims = self.layer_dims();
        let mut off = 0;
        for (fan_in, fan_out) in dims {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut self.params[off..off + fan_in * fan_out] {
                *p = rng.random_range(-a..a);
            }
            off += (fan_in + 1) * fan_out;
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.hidden_widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
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

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        layer_dims(self.input_dim, &self.hidden_widths, self.output_dim)
    }

    /// Evaluates `G_phi(w)`.
    pub fn forward(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut ws = Workspace::new(self);
        self.forward_cached(w, &mut ws)?;
        Ok(ws.output().to_vec())
    }

    /// Gradient of `out_grad . G_phi(w)` with respect to the flat parameters.
    pub fn backward(&self, w: &[f64], out_grad: &[f64]) -> Result<Vec<f64>> {
        let mut ws = Workspace::new(self);
        self.forward_cached(w, &mut ws)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward_cached(&ws, out_grad, &mut grad)?;
        Ok(grad)
    }

    /// Forward pass that records every layer input and pre-activation in
    /// `ws`, so a backward pass can follow without re-evaluating.
    pub fn forward_cached<'a>(&self, w: &[f64], ws: &'a mut Workspace) -> Result<&'a [f64]> {
        if w.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "forward input",
                expected: self.input_dim,
                got: w.len(),
            });
        }
        let nh = self.hidden_widths.len();
        ws.inputs[0].clear();
        ws.inputs[0].extend_from_slice(w);
        let mut off = 0;
        for l in 0..nh {
            let in_len = ws.inputs[l].len();
            let out_len = self.hidden_widths[l];
            let weights = &self.params[off..off + in_len * out_len];
            let biases = &self.params[off + in_len * out_len..off + (in_len + 1) * out_len];
            ws.preacts[l].clear();
            for r in 0..out_len {
                let row = &weights[r * in_len..(r + 1) * in_len];
                ws.preacts[l].push(dot(row, &ws.inputs[l]) + biases[r]);
            }
            // Next layer input is {activation, w}.
            let (head, tail) = ws.inputs.split_at_mut(l + 1);
            let next = &mut tail[0];
            next.clear();
            next.extend(ws.preacts[l].iter().map(|&u| self.activation.apply(u)));
            next.extend_from_slice(w);
            let _ = head;
            off += (in_len + 1) * out_len;
        }
        let in_len = ws.inputs[nh].len();
        let weights = &self.params[off..off + in_len * self.output_dim];
        let biases = &self.params[off + in_len * self.output_dim..];
        ws.out.clear();
        for r in 0..self.output_dim {
            let row = &weights[r * in_len..(r + 1) * in_len];
            ws.out.push(dot(row, &ws.inputs[nh]) + biases[r]);
        }
        Ok(&ws.out)
    }

    /// Accumulates the parameter gradient of `out_grad . G_phi(w)` into
    /// `grad` (`+=`), reusing the forward pass recorded in `ws`.
    pub fn backward_cached(
        &self,
        ws: &Workspace,
        out_grad: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        if out_grad.len() != self.output_dim {
            return Err(Error::DimensionMismatch {
                context: "backward out_grad",
                expected: self.output_dim,
                got: out_grad.len(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                context: "backward grad buffer",
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let nh = self.hidden_widths.len();
        let dims = self.layer_dims();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &(i, o) in &dims {
            offsets.push(off);
            off += (i + 1) * o;
        }

        let mut delta = out_grad.to_vec();
        for l in (0..=nh).rev() {
            let (in_len, out_len) = dims[l];
            let base = offsets[l];
            let input = &ws.inputs[l];
            // Weight and bias gradients for this layer.
            for r in 0..out_len {
                let d = delta[r];
                if d != 0.0 {
                    axpy(d, input, &mut grad[base + r * in_len..base + (r + 1) * in_len]);
                }
                grad[base + in_len * out_len + r] += d;
            }
            if l == 0 {
                break;
            }
            // Propagate through the activation part of the input; the
            // re-injected copy of w needs no gradient.
            let hid = self.hidden_widths[l - 1];
            let weights = &self.params[base..base + in_len * out_len];
            let mut gz = vec![0.0; hid];
            for r in 0..out_len {
                let d = delta[r];
                if d != 0.0 {
                    axpy(d, &weights[r * in_len..r * in_len + hid], &mut gz);
                }
            }
            for (g, &pre) in gz.iter_mut().zip(&ws.preacts[l - 1]) {
                *g *= self.activation.derivative(pre);
            }
            delta = gz;
        }
        Ok(())
    }
}

/// Scratch buffers for one forward/backward pair. Reuse across draws to
/// avoid reallocating activations.
#[derive(Debug, Clone)]
pub struct Workspace {
    /// inputs[l] is the input of affine map l ({activation, w} for l >= 1).
    inputs: Vec<Vec<f64>>,
    /// preacts[l] is the pre-activation of hidden layer l.
    preacts: Vec<Vec<f64>>,
    out: Vec<f64>,
}

impl Workspace {
    pub fn new(net: &GeneratorNetwork) -> Self {
        let nh = net.hidden_widths.len();
        Self {
            inputs: vec![Vec::new(); nh + 1],
            preacts: vec![Vec::new(); nh],
            out: Vec::with_capacity(net.output_dim),
        }
    }

    pub fn output(&self) -> &[f64] {
        &self.out
    }
}

/// RMSprop with a polynomially decaying learning rate
/// `lr_t = base_lr * t^(-lr_decay_exponent)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RmspropState {
    sq_grad_avg: Vec<f64>,
    pub decay: f64,
    pub epsilon: f64,
    pub base_lr: f64,
    pub lr_decay_exponent: f64,
    /// 1-based epoch counter; advanced by every `step`.
    pub epoch: u64,
}

impl RmspropState {
    pub fn new(param_count: usize, base_lr: f64, lr_decay_exponent: f64) -> Self {
        Self {
            sq_grad_avg: vec![0.0; param_count],
            decay: 0.99,
            epsilon: 1e-8,
            base_lr,
            lr_decay_exponent,
            epoch: 1,
        }
    }

    /// Learning rate the next `step` call will use.
    pub fn current_lr(&self) -> f64 {
        self.base_lr * (self.epoch as f64).powf(-self.lr_decay_exponent)
    }

    pub fn sq_grad_avg(&self) -> &[f64] {
        &self.sq_grad_avg
    }

    /// One optimizer step: decay the squared-gradient average, scale the
    /// gradient, move the parameters, advance the epoch.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.sq_grad_avg.len() || grad.len() != self.sq_grad_avg.len() {
            return Err(Error::DimensionMismatch {
                context: "rmsprop step",
                expected: self.sq_grad_avg.len(),
                got: grad.len(),
            });
        }
        let lr = self.current_lr();
        for ((p, g), s) in params.iter_mut().zip(grad).zip(&mut self.sq_grad_avg) {
            *s = self.decay * *s + (1.0 - self.decay) * g * g;
            *p -= lr * g / (*s + self.epsilon).sqrt();
        }
        self.epoch += 1;
        Ok(())
    }
}

/// On-disk network + optimizer snapshot.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub network: GeneratorNetwork,
    pub optimizer: RmspropState,
}

pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, net: &GeneratorNetwork, opt: &RmspropState) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        network: net.clone(),
        optimizer: opt.clone(),
    };
    serde_json::to_writer(BufWriter::new(file), &ckpt).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_checkpoint(path: &Path) -> Result<(GeneratorNetwork, RmspropState)> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let ckpt: Checkpoint = serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::invalid(format!(
            "unsupported checkpoint version {}",
            ckpt.version
        )));
    }
    Ok((ckpt.network, ckpt.optimizer))
}
