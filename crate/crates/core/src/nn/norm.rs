use super::{check_finite, check_len, Tensor2};
use crate::error::Result;

/// Causal instance normalization.
///
/// Each channel of a single frame is normalized by the mean and (biased)
/// variance of its own feature vector, then scaled and shifted per channel.
/// Only the frame being normalized contributes statistics.
#[derive(Debug, Clone)]
pub struct InstanceNorm {
    gamma: Vec<f32>,
    beta: Vec<f32>,
    eps: f32,
}

impl InstanceNorm {
    pub fn new(gamma: &[f32], beta: &[f32], eps: f32) -> Result<Self> {
        check_len("norm beta", gamma.len(), beta.len())?;
        check_finite("norm gamma", gamma)?;
        check_finite("norm beta", beta)?;
        Ok(Self { gamma: gamma.to_vec(), beta: beta.to_vec(), eps })
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&self, x: &Tensor2) -> Result<Tensor2> {
        let mut y = x.clone();
        self.forward_inplace(&mut y)?;
        Ok(y)
    }

    pub fn forward_inplace(&self, x: &mut Tensor2) -> Result<()> {
        check_len("norm channels", self.gamma.len(), x.channels())?;
        for c in 0..x.channels() {
            normalize_row(x.row_mut(c), self.gamma[c], self.beta[c], self.eps);
        }
        Ok(())
    }

    /// Single-channel convenience for vector activations.
    pub fn forward_vector(&self, x: &mut [f32]) -> Result<()> {
        check_len("norm channels", 1, self.gamma.len())?;
        normalize_row(x, self.gamma[0], self.beta[0], self.eps);
        Ok(())
    }
}

fn normalize_row(row: &mut [f32], gamma: f32, beta: f32, eps: f32) {
    if row.is_empty() {
        return;
    }
    let n = row.len() as f64;
    let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let scale = (gamma as f64 / (var + eps as f64).sqrt()) as f32;
    let mean = mean as f32;
    for v in row.iter_mut() {
        *v = (*v - mean) * scale + beta;
    }
}
