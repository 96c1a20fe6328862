//! Fully connected feed-forward regressor trained with mini-batch Adam.
//!
//! The network maps standardized features through hidden layers with a
//! shared activation to one linear output unit. Training minimizes
//! `½·mean((f(x) − z)²) + ½·alpha·Σ‖W‖²` over mini-batches, where `z` is the
//! standardized target and the penalty covers weights but not biases.
//! Training stops after `max_epochs`, or once the epoch loss has failed to
//! improve on the best seen by at least `tol` for more than `patience`
//! consecutive epochs.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::TargetScaler;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::param(format!(
                "activation must be relu or tanh, got {other:?}"
            ))),
        }
    }

    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub alpha: f64,
    pub learning_rate_init: f64,
    /// Defaults to `min(200, n)`.
    pub batch_size: Option<usize>,
    pub max_epochs: usize,
    pub tol: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_layer_sizes: vec![100],
            activation: Activation::Relu,
            alpha: 1e-3,
            learning_rate_init: 1e-3,
            batch_size: None,
            max_epochs: 1000,
            tol: 1e-4,
            patience: 10,
            seed: 0,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layer_sizes.iter().any(|&h| h == 0) {
            return Err(Error::param("hidden layer sizes must be at least 1"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::param(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if !(self.learning_rate_init > 0.0) {
            return Err(Error::param("learning_rate_init must be positive"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::param("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Weights are `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    pub activation: Activation,
    pub layers: Vec<Layer>,
}

fn layer_shapes(n_inputs: usize, hidden: &[usize]) -> Vec<(usize, usize)> {
    let mut sizes = vec![n_inputs];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    sizes.windows(2).map(|w| (w[0], w[1])).collect()
}

impl MlpNet {
    /// Uniform `±sqrt(6 / (fan_in + fan_out))` weights, zero biases.
    pub fn init(n_inputs: usize, hidden: &[usize], activation: Activation, rng: &mut Rng) -> Self {
        let layers = layer_shapes(n_inputs, hidden)
            .into_iter()
            .map(|(fi, fo)| {
                let bound = (6.0 / (fi + fo) as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_fn((fi, fo), |_| rng.random_range(-bound..bound)),
                    bias: Array1::zeros(fo),
                }
            })
            .collect();
        MlpNet { activation, layers }
    }

    pub fn zeros(n_inputs: usize, hidden: &[usize], activation: Activation) -> Self {
        let layers = layer_shapes(n_inputs, hidden)
            .into_iter()
            .map(|(fi, fo)| Layer {
                weights: Array2::zeros((fi, fo)),
                bias: Array1::zeros(fo),
            })
            .collect();
        MlpNet { activation, layers }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    /// Activations of every layer, input first, output last.
    fn activations(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.to_owned()];
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.weights) + &layer.bias;
            if l < last {
                self.activation.apply(&mut z);
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let mut acts = self.activations(x);
        acts.pop().unwrap().column(0).to_vec()
    }

    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.iter().map(|w| w * w).sum::<f64>()).sum()
    }

    /// Parameters flattened layer by layer: weights (row-major), then bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn assign_flat(&mut self, params: &[f64]) {
        let mut it = params.iter();
        for l in &mut self.layers {
            for (w, v) in l.weights.iter_mut().zip(&mut it) {
                *w = *v;
            }
            for (b, v) in l.bias.iter_mut().zip(&mut it) {
                *b = *v;
            }
        }
    }

    /// Penalized half-MSE on `(x, z)` and its gradient in [`Self::flat_params`] order.
    pub fn loss_and_gradient(&self, x: ArrayView2<f64>, z: &[f64], alpha: f64) -> (f64, Vec<f64>) {
        let b = x.nrows() as f64;
        let acts = self.activations(x);
        let out = acts.last().unwrap();
        let mut delta = Array2::from_shape_fn((x.nrows(), 1), |(i, _)| out[[i, 0]] - z[i]);
        let loss = 0.5 * delta.iter().map(|d| d * d).sum::<f64>() / b + 0.5 * alpha * self.weight_norm_sq();
        delta /= b;
        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let gw = acts[l].t().dot(&delta) + &(&layer.weights * alpha);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut next = delta.dot(&layer.weights.t());
                next.zip_mut_with(&acts[l], |d, &a| *d *= self.activation.derivative(a));
                delta = next;
            }
            grads.push((gw, gb));
        }
        grads.reverse();
        let mut flat = Vec::new();
        for (gw, gb) in grads {
            flat.extend(gw.iter());
            flat.extend(gb.iter());
        }
        (loss, flat)
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(&mut self.v)) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub net: MlpNet,
    pub target: TargetScaler,
    pub epochs: usize,
    pub converged: bool,
}

impl MlpModel {
    /// `x` is expected to be standardized already; `y` is scaled here.
    pub fn fit(x: ArrayView2<f64>, y: &[f64], p: &MlpParams) -> Result<Self> {
        p.validate()?;
        let n = x.nrows();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if y.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: y.len(),
            });
        }
        let target = TargetScaler::fit(y);
        let z: Vec<f64> = y.iter().map(|&v| target.forward(v)).collect();
        let mut rng = rng::rng(p.seed);
        let mut net = MlpNet::init(x.ncols(), &p.hidden_layer_sizes, p.activation, &mut rng);
        let mut params = net.flat_params();
        let mut adam = Adam::new(params.len(), p.learning_rate_init);
        let batch = p.batch_size.unwrap_or(200).min(n);
        let mut best = f64::INFINITY;
        let mut stale = 0;
        let mut epochs = 0;
        let mut converged = false;
        for epoch in 0..p.max_epochs {
            epochs = epoch + 1;
            let order = rng::permutation(n, &mut rng);
            let mut total = 0.0;
            for chunk in order.chunks(batch) {
                let xb = x.select(Axis(0), chunk);
                let zb: Vec<f64> = chunk.iter().map(|&i| z[i]).collect();
                let (loss, grad) = net.loss_and_gradient(xb.view(), &zb, p.alpha);
                total += loss * chunk.len() as f64;
                adam.step(&mut params, &grad);
                net.assign_flat(&params);
            }
            let loss = total / n as f64;
            if !loss.is_finite() || params.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { epoch: epochs });
            }
            if loss > best - p.tol {
                stale += 1;
            } else {
                stale = 0;
            }
            best = best.min(loss);
            if stale > p.patience {
                converged = true;
                break;
            }
        }
        Ok(MlpModel {
            net,
            target,
            epochs,
            converged,
        })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.net.forward(x).into_iter().map(|v| self.target.inverse(v)).collect()
    }
}
