use super::{axpy, check_finite, check_len};
use crate::error::Result;

/// Fully connected layer, `y = W x + b` with `W` given as `[out, in]`.
#[derive(Debug, Clone)]
pub struct Linear {
    in_features: usize,
    out_features: usize,
    /// `[in, out]`, so the product is a run of contiguous axpys.
    weight_t: Vec<f32>,
    bias: Vec<f32>,
}

impl Linear {
    pub fn new(in_features: usize, out_features: usize, weight: &[f32], bias: &[f32]) -> Result<Self> {
        check_len("linear weight", in_features * out_features, weight.len())?;
        check_len("linear bias", out_features, bias.len())?;
        check_finite("linear weight", weight)?;
        check_finite("linear bias", bias)?;
        let mut weight_t = vec![0.0; weight.len()];
        for o in 0..out_features {
            for i in 0..in_features {
                weight_t[i * out_features + o] = weight[o * in_features + i];
            }
        }
        Ok(Self { in_features, out_features, weight_t, bias: bias.to_vec() })
    }

    pub fn in_features(&self) -> usize {
        self.in_features
    }

    pub fn out_features(&self) -> usize {
        self.out_features
    }

    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        check_len("linear input", self.in_features, x.len())?;
        let mut y = self.bias.clone();
        self.accumulate(x, &mut y);
        Ok(y)
    }

    /// `y += W x`, no bias, no shape checks.
    pub(crate) fn accumulate(&self, x: &[f32], y: &mut [f32]) {
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, &self.weight_t[i * self.out_features..(i + 1) * self.out_features], y);
            }
        }
    }
}
