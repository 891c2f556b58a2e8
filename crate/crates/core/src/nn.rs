//! One-hidden-layer tanh network with a sigmoid output, trained with
//! weighted binary cross-entropy.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;
use crate::error::{CoreError, Result};
use crate::math;
use crate::params::{Gradient, ModelParams, ModelShape};
use crate::seed;

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTrainConfig {
    #[serde(default = "LocalTrainConfig::default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "LocalTrainConfig::default_epochs")]
    pub epochs: usize,
    #[serde(default = "LocalTrainConfig::default_batch_size")]
    pub batch_size: usize,
    #[serde(default, skip_serializing)]
    pub rng_seed: u64,
}

impl LocalTrainConfig {
    fn default_learning_rate() -> f64 {
        0.01
    }
    fn default_epochs() -> usize {
        10
    }
    fn default_batch_size() -> usize {
        10
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(CoreError::InvalidConfig(
                "learning rate must be finite and non-negative",
            ));
        }
        if self.batch_size == 0 {
            return Err(CoreError::InvalidConfig("batch size must be at least 1"));
        }
        Ok(())
    }
}

impl Default for LocalTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: Self::default_learning_rate(),
            epochs: Self::default_epochs(),
            batch_size: Self::default_batch_size(),
            rng_seed: 0,
        }
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(shape: ModelShape, seed: u64) -> ModelParams {
    let mut rng = seed::stream(seed);
    let mut params = ModelParams::zeros(shape);
    let h = shape.hidden_dim as f64;
    let limit1 = math::sqrt(6.0 / (shape.input_dim as f64 + h));
    let limit2 = math::sqrt(6.0 / (h + ModelShape::OUTPUT_DIM as f64));
    let values = params.values_mut();
    for v in &mut values[shape.w1()] {
        *v = rng.random_range(-limit1..=limit1);
    }
    for v in &mut values[shape.w2()] {
        *v = rng.random_range(-limit2..=limit2);
    }
    params
}

fn check_dim(params: &ModelParams, x: &Matrix) -> Result<()> {
    let expected = params.shape().input_dim;
    if x.cols() != expected {
        return Err(CoreError::DimensionMismatch {
            expected,
            actual: x.cols(),
        });
    }
    Ok(())
}

/// Forward pass for one row; fills `hidden` with the tanh activations and
/// returns the output logit.
#[inline]
fn forward_row(params: &ModelParams, row: &[f64], hidden: &mut [f64]) -> f64 {
    let shape = params.shape();
    let v = params.values();
    let w1 = &v[shape.w1()];
    let b1 = &v[shape.b1()];
    let w2 = &v[shape.w2()];
    let mut logit = v[shape.b2()];
    for (j, a) in hidden.iter_mut().enumerate() {
        let weights = &w1[j * shape.input_dim..(j + 1) * shape.input_dim];
        let pre = weights
            .iter()
            .zip(row)
            .fold(b1[j], |acc, (w, x)| acc + w * x);
        *a = math::tanh(pre);
        logit += w2[j] * *a;
    }
    logit
}

pub fn predict_proba(params: &ModelParams, x: &Matrix) -> Result<Vec<f64>> {
    check_dim(params, x)?;
    let mut hidden = alloc::vec![0.0; params.shape().hidden_dim];
    Ok((0..x.rows())
        .map(|i| math::sigmoid(forward_row(params, x.row(i), &mut hidden)))
        .collect())
}

fn bce(p: f64, y: bool) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if y {
        -math::ln(p)
    } else {
        -math::ln(1.0 - p)
    }
}

/// Weighted mean BCE over `rows` and its gradient, written into `grad`
/// (overwritten). `weights[k]` belongs to `rows[k]`.
pub(crate) fn batch_loss_grad(
    params: &ModelParams,
    x: &Matrix,
    labels: &[bool],
    weights: &[f64],
    rows: &[usize],
    hidden: &mut [f64],
    grad: &mut [f64],
) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(CoreError::ZeroWeightSum);
    }
    let shape = params.shape();
    let d = shape.input_dim;
    let v = params.values();
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (&i, &w) in rows.iter().zip(weights) {
        let row = x.row(i);
        let p = math::sigmoid(forward_row(params, row, hidden));
        let scale = w / total;
        loss += scale * bce(p, labels[i]);
        // d(loss)/d(logit) for sigmoid + BCE.
        let dz = scale * (p - if labels[i] { 1.0 } else { 0.0 });
        grad[shape.b2()] += dz;
        let w2 = shape.w2();
        let b1 = shape.b1();
        for (j, &a) in hidden.iter().enumerate() {
            grad[w2.start + j] += dz * a;
            let dh = dz * v[w2.start + j] * (1.0 - a * a);
            grad[b1.start + j] += dh;
            let gw = &mut grad[j * d..(j + 1) * d];
            for (g, xi) in gw.iter_mut().zip(row) {
                *g += dh * xi;
            }
        }
    }
    Ok(loss)
}

/// Weighted mean binary cross-entropy and its exact gradient. `weights`
/// defaults to all ones.
pub fn loss_and_grad(
    params: &ModelParams,
    x: &Matrix,
    labels: &[bool],
    weights: Option<&[f64]>,
) -> Result<(f64, Gradient)> {
    check_dim(params, x)?;
    let n = x.rows();
    if labels.len() != n {
        return Err(CoreError::LengthMismatch {
            what: "labels",
            expected: n,
            actual: labels.len(),
        });
    }
    let ones;
    let weights = match weights {
        Some(w) if w.len() != n => {
            return Err(CoreError::LengthMismatch {
                what: "sample weights",
                expected: n,
                actual: w.len(),
            })
        }
        Some(w) if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) => {
            return Err(CoreError::InvalidConfig(
                "sample weights must be finite and non-negative",
            ))
        }
        Some(w) => w,
        None => {
            ones = alloc::vec![1.0; n];
            &ones
        }
    };
    let rows: Vec<usize> = (0..n).collect();
    let mut hidden = alloc::vec![0.0; params.shape().hidden_dim];
    let mut grad = alloc::vec![0.0; params.len()];
    let loss = batch_loss_grad(params, x, labels, weights, &rows, &mut hidden, &mut grad)?;
    Ok((loss, Gradient::new(grad)))
}

/// `params - lr * grad`.
pub fn apply_step(params: &ModelParams, grad: &Gradient, lr: f64) -> Result<ModelParams> {
    params.offset(grad.as_slice(), -lr)
}
