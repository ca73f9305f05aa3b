//! One-hidden-layer perceptron and logistic regression with hand-written
//! backpropagation.
//!
//! Parameter layout (flat): `W1` (hidden x in, row-major), `b1`,
//! `W2` (out x hidden, row-major), `b2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Targets are class indices; `out_dim` is the number of classes.
    SoftmaxCrossEntropy,
    /// Targets are 0/1; `out_dim` must be 1.
    Logistic,
    /// `0.5 * |output - target|^2`; `target_dim == out_dim`.
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub loss: Loss,
}

impl MlpSpec {
    pub fn param_count(&self) -> usize {
        self.in_dim * self.hidden_dim + self.hidden_dim + self.hidden_dim * self.out_dim + self.out_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.hidden_dim == 0 || self.out_dim == 0 {
            return Err(Error::config("model", "layer sizes must be >= 1"));
        }
        if self.loss == Loss::Logistic && self.out_dim != 1 {
            return Err(Error::config("model.out_dim", "logistic loss needs out_dim = 1"));
        }
        if self.loss == Loss::SoftmaxCrossEntropy && self.out_dim < 2 {
            return Err(Error::config("model.out_dim", "softmax needs at least 2 classes"));
        }
        Ok(())
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x696e_6974));
        let mut p = Vec::with_capacity(self.param_count());
        let a1 = (6.0 / (self.in_dim + self.hidden_dim) as f64).sqrt();
        p.extend((0..self.in_dim * self.hidden_dim).map(|_| rng.random_range(-a1..a1)));
        p.extend(std::iter::repeat_n(0.0, self.hidden_dim));
        let a2 = (6.0 / (self.hidden_dim + self.out_dim) as f64).sqrt();
        p.extend((0..self.hidden_dim * self.out_dim).map(|_| rng.random_range(-a2..a2)));
        p.extend(std::iter::repeat_n(0.0, self.out_dim));
        p
    }

    fn offsets(&self) -> [usize; 4] {
        let w1 = 0;
        let b1 = w1 + self.in_dim * self.hidden_dim;
        let w2 = b1 + self.hidden_dim;
        let b2 = w2 + self.hidden_dim * self.out_dim;
        [w1, b1, w2, b2]
    }

    fn check(&self, params: &[f64], data: &Dataset) -> Result<()> {
        self.validate()?;
        if params.len() != self.param_count() {
            return Err(Error::Shape {
                what: "mlp parameters",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        if data.in_dim != self.in_dim {
            return Err(Error::Shape {
                what: "mlp input",
                expected: self.in_dim,
                got: data.in_dim,
            });
        }
        let want_target = match self.loss {
            Loss::SquaredError => self.out_dim,
            _ => 1,
        };
        if data.target_dim != want_target {
            return Err(Error::Shape {
                what: "mlp target",
                expected: want_target,
                got: data.target_dim,
            });
        }
        Ok(())
    }

    fn forward(&self, params: &[f64], x: &[f64], hidden_pre: &mut [f64], hidden: &mut [f64], out: &mut [f64]) {
        let [w1, b1, w2, b2] = self.offsets();
        for h in 0..self.hidden_dim {
            let row = &params[w1 + h * self.in_dim..w1 + (h + 1) * self.in_dim];
            let z = params[b1 + h] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
            hidden_pre[h] = z;
            hidden[h] = match self.activation {
                Activation::Tanh => z.tanh(),
                Activation::Relu => z.max(0.0),
            };
        }
        for o in 0..self.out_dim {
            let row = &params[w2 + o * self.hidden_dim..w2 + (o + 1) * self.hidden_dim];
            out[o] = params[b2 + o] + row.iter().zip(hidden.iter()).map(|(w, a)| w * a).sum::<f64>();
        }
    }

    /// Raw network outputs for every example.
    pub fn predict(&self, params: &[f64], data: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.check(params, data)?;
        let mut pre = vec![0.0; self.hidden_dim];
        let mut hid = vec![0.0; self.hidden_dim];
        Ok((0..data.len())
            .map(|i| {
                let mut out = vec![0.0; self.out_dim];
                self.forward(params, data.input(i), &mut pre, &mut hid, &mut out);
                out
            })
            .collect())
    }

    /// Fraction of correctly classified examples (classification losses).
    pub fn accuracy(&self, params: &[f64], data: &Dataset) -> Result<f64> {
        if self.loss == Loss::SquaredError {
            return Err(Error::config("model.loss", "accuracy needs a classification loss"));
        }
        let outs = self.predict(params, data)?;
        let correct = outs
            .iter()
            .enumerate()
            .filter(|(i, o)| predicted_class(self.loss, o) == data.label(*i))
            .count();
        Ok(correct as f64 / data.len().max(1) as f64)
    }

    /// Mean loss over `idx` and its exact gradient.
    pub fn loss_grad(&self, params: &[f64], data: &Dataset, idx: &[usize]) -> Result<(f64, Vec<f64>)> {
        self.check(params, data)?;
        if idx.is_empty() {
            return Err(Error::config("batch", "minibatch must not be empty"));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= data.len()) {
            return Err(Error::Shape {
                what: "batch index",
                expected: data.len(),
                got: bad,
            });
        }
        let [w1, b1, w2, b2] = self.offsets();
        let (hd, od) = (self.hidden_dim, self.out_dim);
        let mut grad = vec![0.0; self.param_count()];
        let mut total = 0.0;
        let mut pre = vec![0.0; hd];
        let mut hid = vec![0.0; hd];
        let mut out = vec![0.0; od];
        let mut d_out = vec![0.0; od];
        let mut d_hid = vec![0.0; hd];

        for &i in idx {
            let x = data.input(i);
            self.forward(params, x, &mut pre, &mut hid, &mut out);
            total += output_loss_grad(self.loss, &out, data.target(i), &mut d_out);

            for o in 0..od {
                grad[b2 + o] += d_out[o];
                for h in 0..hd {
                    grad[w2 + o * hd + h] += d_out[o] * hid[h];
                }
            }
            for h in 0..hd {
                let back: f64 = (0..od).map(|o| params[w2 + o * hd + h] * d_out[o]).sum();
                let slope = match self.activation {
                    Activation::Tanh => 1.0 - hid[h] * hid[h],
                    Activation::Relu => {
                        if pre[h] > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                d_hid[h] = back * slope;
            }
            for h in 0..hd {
                grad[b1 + h] += d_hid[h];
                for (j, xj) in x.iter().enumerate() {
                    grad[w1 + h * self.in_dim + j] += d_hid[h] * xj;
                }
            }
        }
        let scale = 1.0 / idx.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((total * scale, grad))
    }
}

fn predicted_class(loss: Loss, out: &[f64]) -> usize {
    match loss {
        Loss::Logistic => (out[0] > 0.0) as usize,
        _ => out
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (k, &v)| if v > bv { (k, v) } else { (bi, bv) })
            .0,
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-example loss; writes dLoss/dOutput into `d_out`.
fn output_loss_grad(loss: Loss, out: &[f64], target: &[f64], d_out: &mut [f64]) -> f64 {
    match loss {
        Loss::SquaredError => {
            let mut l = 0.0;
            for k in 0..out.len() {
                let r = out[k] - target[k];
                d_out[k] = r;
                l += 0.5 * r * r;
            }
            l
        }
        Loss::Logistic => {
            let (z, y) = (out[0], target[0]);
            d_out[0] = sigmoid(z) - y;
            softplus(z) - y * z
        }
        Loss::SoftmaxCrossEntropy => {
            let class = target[0] as usize;
            let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = out.iter().map(|z| (z - max).exp()).sum();
            let lse = max + sum.ln();
            for k in 0..out.len() {
                d_out[k] = (out[k] - lse).exp() - if k == class { 1.0 } else { 0.0 };
            }
            lse - out[class]
        }
    }
}

/// Logistic regression: parameters `[w_0..w_{d-1}, b]`, 0/1 targets.
pub fn logistic_regression_loss_grad(params: &[f64], data: &Dataset, idx: &[usize]) -> Result<(f64, Vec<f64>)> {
    let d = data.in_dim;
    if params.len() != d + 1 {
        return Err(Error::Shape {
            what: "logistic regression parameters",
            expected: d + 1,
            got: params.len(),
        });
    }
    if idx.is_empty() {
        return Err(Error::config("batch", "minibatch must not be empty"));
    }
    let mut grad = vec![0.0; d + 1];
    let mut total = 0.0;
    let mut dz = [0.0];
    for &i in idx {
        let x = data.input(i);
        let z = params[d] + x.iter().zip(params).map(|(x, w)| x * w).sum::<f64>();
        total += output_loss_grad(Loss::Logistic, &[z], data.target(i), &mut dz);
        for j in 0..d {
            grad[j] += dz[0] * x[j];
        }
        grad[d] += dz[0];
    }
    let scale = 1.0 / idx.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((total * scale, grad))
}
