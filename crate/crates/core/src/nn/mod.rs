//! Inference-only neural network primitives.
//!
//! Everything here is plain `f32` code on contiguous buffers. Weights are
//! taken in the usual framework layouts (`[out, in]` for affine maps,
//! `[out, in/groups, k]` for convolutions, `[in, out/groups, k]` for
//! transposed convolutions) and repacked at construction where a different
//! order gives contiguous inner loops.

mod conv;
mod gru;
mod linear;
mod norm;

pub use conv::{Conv1d, Conv2d, Conv2dSpec, ConvSpec};
pub use gru::{GruCell, GruSpec, GruState};
pub use linear::Linear;
pub use norm::InstanceNorm;

use crate::error::{shape_err, Error, Result};

/// Channels x features activation, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    channels: usize,
    features: usize,
    data: Vec<f32>,
}

impl Tensor2 {
    pub fn new(channels: usize, features: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * features {
            return Err(shape_err("tensor data", channels * features, data.len()));
        }
        Ok(Self { channels, features, data })
    }

    pub fn zeros(channels: usize, features: usize) -> Self {
        Self { channels, features, data: vec![0.0; channels * features] }
    }

    pub fn from_vector(v: Vec<f32>) -> Self {
        Self { channels: 1, features: v.len(), data: v }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.features)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, c: usize) -> &[f32] {
        &self.data[c * self.features..(c + 1) * self.features]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f32] {
        &mut self.data[c * self.features..(c + 1) * self.features]
    }

    /// Swaps the channel and feature axes.
    pub fn transpose(&self) -> Tensor2 {
        let mut out = vec![0.0; self.data.len()];
        for c in 0..self.channels {
            for f in 0..self.features {
                out[f * self.channels + c] = self.data[c * self.features + f];
            }
        }
        Tensor2 { channels: self.features, features: self.channels, data: out }
    }

    /// Stacks `self` on top of `other` along the channel axis.
    pub fn concat_channels(&self, other: &Tensor2) -> Result<Tensor2> {
        if self.features != other.features {
            return Err(shape_err("channel concat features", self.features, other.features));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Tensor2 { channels: self.channels + other.channels, features: self.features, data })
    }

    pub fn map_inplace(&mut self, f: impl Fn(f32) -> f32) {
        self.data.iter_mut().for_each(|x| *x = f(*x));
    }
}

/// Channels x time x features input for the 2D convolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    channels: usize,
    time: usize,
    features: usize,
    data: Vec<f32>,
}

impl Tensor3 {
    pub fn new(channels: usize, time: usize, features: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * time * features {
            return Err(shape_err("tensor3 data", channels * time * features, data.len()));
        }
        Ok(Self { channels, time, features, data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.time, self.features)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, c: usize, t: usize) -> &[f32] {
        let start = (c * self.time + t) * self.features;
        &self.data[start..start + self.features]
    }
}

#[inline]
pub fn hard_swish(x: f32) -> f32 {
    x * (x + 3.0).clamp(0.0, 6.0) / 6.0
}

#[inline]
pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

pub fn hard_swish_inplace(xs: &mut [f32]) {
    xs.iter_mut().for_each(|x| *x = hard_swish(*x));
}

pub fn sigmoid_inplace(xs: &mut [f32]) {
    xs.iter_mut().for_each(|x| *x = sigmoid(*x));
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy(a: f32, x: &[f32], y: &mut [f32]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(shape_err(context, expected, found))
    }
}

pub(crate) fn check_finite(what: &str, xs: &[f32]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} holds non-finite values")))
    }
}
