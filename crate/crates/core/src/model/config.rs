use serde::{Deserialize, Serialize};

use crate::dsp::FREQ_BINS;
use crate::error::{Error, Result};
use crate::nn::{Conv2dSpec, ConvSpec, GruSpec};

/// Architecture hyper-parameters. Every weight shape is derived from these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// One-sided STFT bins at the model input and mask output.
    pub freq_bins: usize,
    /// Width of the learned input mapping.
    pub map_dim: usize,
    /// Past mapped frames seen by the encoder entry block.
    pub encoder_lookback: usize,
    /// Past frames seen by the mask head.
    pub mask_lookback: usize,
    pub entry_channels: usize,
    pub entry_freq_kernel: usize,
    pub encoder_kernels: Vec<usize>,
    pub encoder_strides: Vec<usize>,
    pub expansion_channels: usize,
    pub encoder_out_channels: Vec<usize>,
    pub bottleneck_hidden: usize,
    pub ae_hidden: usize,
    pub decoder_channels: usize,
    pub mask_freq_kernel: usize,
    pub norm_eps: f32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            freq_bins: FREQ_BINS,
            map_dim: 96,
            encoder_lookback: 32,
            mask_lookback: 3,
            entry_channels: 32,
            entry_freq_kernel: 3,
            encoder_kernels: vec![5, 3, 5, 3, 5, 3],
            encoder_strides: vec![2, 1, 2, 1, 2, 2],
            expansion_channels: 256,
            encoder_out_channels: vec![16, 16, 16, 16, 16, 64],
            bottleneck_hidden: 64,
            ae_hidden: 24,
            decoder_channels: 64,
            mask_freq_kernel: 3,
            norm_eps: 1e-5,
        }
    }
}

/// The three convolutions of one inverted-bottleneck encoder block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderBlockSpec {
    pub expand: ConvSpec,
    pub depthwise: ConvSpec,
    pub project: ConvSpec,
    pub in_features: usize,
    pub out_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderBlockSpec {
    pub fuse: ConvSpec,
    pub up: ConvSpec,
    /// Encoder block whose output is concatenated to this block's input.
    pub skip_from: usize,
    pub in_features: usize,
    pub out_features: usize,
}

impl ModelConfig {
    /// A small configuration for fast tests and desk-scale experiments.
    pub fn tiny() -> Self {
        Self {
            freq_bins: 33,
            map_dim: 16,
            encoder_lookback: 4,
            mask_lookback: 2,
            entry_channels: 4,
            entry_freq_kernel: 3,
            encoder_kernels: vec![3, 3],
            encoder_strides: vec![2, 2],
            expansion_channels: 8,
            encoder_out_channels: vec![4, 6],
            bottleneck_hidden: 6,
            ae_hidden: 5,
            decoder_channels: 6,
            mask_freq_kernel: 3,
            norm_eps: 1e-5,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.encoder_kernels.len()
    }

    /// Depth of the map-in history: current frame plus the look-back.
    pub fn input_window(&self) -> usize {
        self.encoder_lookback + 1
    }

    pub fn mask_window(&self) -> usize {
        self.mask_lookback + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let n = self.num_blocks();
        if self.freq_bins < 2 || self.map_dim == 0 {
            return bad(format!("freq_bins={} map_dim={} too small", self.freq_bins, self.map_dim));
        }
        if n == 0 || self.encoder_strides.len() != n || self.encoder_out_channels.len() != n {
            return bad(format!(
                "encoder lists must share a non-zero length (kernels {}, strides {}, channels {})",
                n,
                self.encoder_strides.len(),
                self.encoder_out_channels.len()
            ));
        }
        for (name, k) in [("entry_freq_kernel", self.entry_freq_kernel), ("mask_freq_kernel", self.mask_freq_kernel)]
            .into_iter()
            .chain(self.encoder_kernels.iter().map(|&k| ("encoder kernel", k)))
        {
            if k == 0 || k % 2 == 0 {
                return bad(format!("{name} must be odd, got {k}"));
            }
        }
        let mut f = self.map_dim;
        for (i, &s) in self.encoder_strides.iter().enumerate() {
            match s {
                1 => {}
                2 if f % 2 == 0 => f /= 2,
                2 => return bad(format!("block {i} halves an odd feature size {f}")),
                _ => return bad(format!("block {i} stride must be 1 or 2, got {s}")),
            }
        }
        let zero_sized = [
            ("entry_channels", self.entry_channels),
            ("expansion_channels", self.expansion_channels),
            ("ae_hidden", self.ae_hidden),
            ("decoder_channels", self.decoder_channels),
        ];
        if let Some((name, _)) = zero_sized.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{name} must be positive"));
        }
        if self.encoder_out_channels.contains(&0) {
            return bad("encoder_out_channels must be positive".into());
        }
        let last = *self.encoder_out_channels.last().unwrap();
        if self.bottleneck_hidden != last {
            return bad(format!(
                "bottleneck_hidden ({}) must equal the last encoder block's channels ({last}) so the GRU output maps back onto the encoder shape",
                self.bottleneck_hidden
            ));
        }
        if !(self.norm_eps.is_finite() && self.norm_eps > 0.0) {
            return bad(format!("norm_eps must be positive, got {}", self.norm_eps));
        }
        Ok(())
    }

    /// Feature sizes at the entry and after every encoder block.
    pub fn encoder_feature_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.map_dim];
        let mut f = self.map_dim;
        for &s in &self.encoder_strides {
            f /= s;
            sizes.push(f);
        }
        sizes
    }

    pub fn bottleneck_features(&self) -> usize {
        *self.encoder_feature_sizes().last().unwrap()
    }

    pub fn entry_conv(&self) -> Conv2dSpec {
        let pad = self.entry_freq_kernel / 2;
        Conv2dSpec {
            in_channels: 1,
            out_channels: self.entry_channels,
            kernel_time: self.input_window(),
            kernel_freq: self.entry_freq_kernel,
            pad_freq_left: pad,
            pad_freq_right: pad,
        }
    }

    pub fn encoder_block(&self, i: usize) -> EncoderBlockSpec {
        let sizes = self.encoder_feature_sizes();
        let c_in = if i == 0 { self.entry_channels } else { self.encoder_out_channels[i - 1] };
        let (k, s) = (self.encoder_kernels[i], self.encoder_strides[i]);
        let (pad_left, pad_right) = ConvSpec::same_padding(k, s);
        let e = self.expansion_channels;
        EncoderBlockSpec {
            expand: ConvSpec::pointwise(c_in, e),
            depthwise: ConvSpec {
                kernel: k,
                stride: s,
                pad_left,
                pad_right,
                depthwise: true,
                ..ConvSpec::pointwise(e, e)
            },
            project: ConvSpec::pointwise(e, self.encoder_out_channels[i]),
            in_features: sizes[i],
            out_features: sizes[i + 1],
        }
    }

    /// Pointwise over the swapped (features, channels) layout: F_last -> 1.
    pub fn bottleneck_squeeze(&self) -> ConvSpec {
        ConvSpec::pointwise(self.bottleneck_features(), 1)
    }

    pub fn bottleneck_gru(&self) -> GruSpec {
        GruSpec { input_size: *self.encoder_out_channels.last().unwrap(), hidden_size: self.bottleneck_hidden }
    }

    pub fn bottleneck_expand(&self) -> ConvSpec {
        ConvSpec::pointwise(1, self.bottleneck_features())
    }

    /// Decoder block `d` mirrors encoder block `n - 1 - d`: same kernel,
    /// stride and padding, transposed.
    pub fn decoder_block(&self, d: usize) -> DecoderBlockSpec {
        let n = self.num_blocks();
        let mirror = n - 1 - d;
        let sizes = self.encoder_feature_sizes();
        let prev = if d == 0 { self.bottleneck_hidden } else { self.decoder_channels };
        let skip = self.encoder_out_channels[mirror];
        let (k, s) = (self.encoder_kernels[mirror], self.encoder_strides[mirror]);
        let (pad_left, pad_right) = ConvSpec::same_padding(k, s);
        let c = self.decoder_channels;
        DecoderBlockSpec {
            fuse: ConvSpec::pointwise(prev + skip, c),
            up: ConvSpec { kernel: k, stride: s, pad_left, pad_right, transposed: true, ..ConvSpec::pointwise(c, c) },
            skip_from: mirror,
            in_features: sizes[mirror + 1],
            out_features: sizes[mirror],
        }
    }

    pub fn decoder_collapse(&self) -> ConvSpec {
        ConvSpec::pointwise(self.decoder_channels, 1)
    }

    pub fn mask_conv(&self) -> Conv2dSpec {
        let pad = self.mask_freq_kernel / 2;
        Conv2dSpec {
            in_channels: 2,
            out_channels: 1,
            kernel_time: self.mask_window(),
            kernel_freq: self.mask_freq_kernel,
            pad_freq_left: pad,
            pad_freq_right: pad,
        }
    }

    pub fn ae_gru(&self) -> GruSpec {
        GruSpec { input_size: self.ae_hidden, hidden_size: self.ae_hidden }
    }
}
