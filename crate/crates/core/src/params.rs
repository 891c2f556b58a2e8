use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Layer sizes of the single-hidden-layer classifier. The output layer is a
/// single sigmoid unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl ModelShape {
    pub const OUTPUT_DIM: usize = 1;
    pub const DEFAULT_HIDDEN: usize = 10;

    pub fn new(input_dim: usize, hidden_dim: usize) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(CoreError::InvalidConfig(
                "model dimensions must be at least 1",
            ));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
        })
    }

    pub fn param_count(&self) -> usize {
        let (d, h, o) = (self.input_dim, self.hidden_dim, Self::OUTPUT_DIM);
        d * h + h + h * o + o
    }

    // Canonical layout: W1 (hidden x input, row-major), b1, W2 (hidden), b2.
    pub(crate) fn w1(&self) -> core::ops::Range<usize> {
        0..self.input_dim * self.hidden_dim
    }

    pub(crate) fn b1(&self) -> core::ops::Range<usize> {
        let start = self.input_dim * self.hidden_dim;
        start..start + self.hidden_dim
    }

    pub(crate) fn w2(&self) -> core::ops::Range<usize> {
        let start = (self.input_dim + 1) * self.hidden_dim;
        start..start + self.hidden_dim
    }

    pub(crate) fn b2(&self) -> usize {
        (self.input_dim + 2) * self.hidden_dim
    }
}

/// Flat parameter vector of a model with a fixed [`ModelShape`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    shape: ModelShape,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(shape: ModelShape) -> Self {
        Self {
            shape,
            values: alloc::vec![0.0; shape.param_count()],
        }
    }

    pub fn from_values(shape: ModelShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.param_count() {
            return Err(CoreError::LengthMismatch {
                what: "model parameters",
                expected: shape.param_count(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("model parameters"));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn check_same_layout(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(CoreError::LengthMismatch {
                what: "model parameters",
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }

    /// `self - base`, element-wise.
    pub fn delta_from(&self, base: &Self) -> Result<Vec<f64>> {
        self.check_same_layout(base)?;
        Ok(self
            .values
            .iter()
            .zip(&base.values)
            .map(|(a, b)| a - b)
            .collect())
    }

    /// `self + scale * direction`, element-wise.
    pub fn offset(&self, direction: &[f64], scale: f64) -> Result<Self> {
        if direction.len() != self.len() {
            return Err(CoreError::LengthMismatch {
                what: "update direction",
                expected: self.len(),
                actual: direction.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(direction)
            .map(|(p, d)| p + scale * d)
            .collect();
        Self::from_values(self.shape, values)
    }
}

/// Gradient of the loss with respect to [`ModelParams`], same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(Vec<f64>);

impl Gradient {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}
