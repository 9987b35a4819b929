use serde::Serialize;

use crate::audio::SAMPLE_RATE;
use crate::dsp::HOP;
use crate::error::Result;
use crate::model::ModelConfig;

/// Parameter counts split at the mapping boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamCounts {
    pub total: usize,
    /// Map_in (both norms and the affine) plus Map_out.
    pub mapping: usize,
    /// Only the two mapping affines, weights and biases.
    pub mapping_fnn: usize,
    pub core: usize,
}

/// Multiply-accumulates for one streaming step, per sub-module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MacBreakdown {
    pub map_in: u64,
    pub encoder: u64,
    pub bottleneck: u64,
    pub decoder: u64,
    pub ae: u64,
    pub mask_head: u64,
    pub map_out: u64,
}

impl MacBreakdown {
    pub fn mapping(&self) -> u64 {
        self.map_in + self.map_out
    }

    pub fn core(&self) -> u64 {
        self.encoder + self.bottleneck + self.decoder + self.ae + self.mask_head
    }

    pub fn total(&self) -> u64 {
        self.mapping() + self.core()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    pub params: ParamCounts,
    pub macs: MacBreakdown,
    pub frames_per_second: f64,
}

impl CostReport {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        Ok(Self {
            params: count_params(config)?,
            macs: count_macs(config)?,
            frames_per_second: SAMPLE_RATE as f64 / HOP as f64,
        })
    }

    pub fn macs_per_frame(&self) -> u64 {
        self.macs.total()
    }

    pub fn core_macs_per_frame(&self) -> u64 {
        self.macs.core()
    }

    pub fn macs_per_second(&self) -> f64 {
        self.macs.total() as f64 * self.frames_per_second
    }

    pub fn core_macs_per_second(&self) -> f64 {
        self.macs.core() as f64 * self.frames_per_second
    }
}

/// Closed-form parameter count. Written out layer by layer rather than
/// summed from the weight layout, so the two can cross-check each other.
pub fn count_params(config: &ModelConfig) -> Result<ParamCounts> {
    config.validate()?;
    let f = config.freq_bins;
    let m = config.map_dim;
    let e = config.expansion_channels;
    let d = config.decoder_channels;
    let a = config.ae_hidden;
    let h = config.bottleneck_hidden;
    let n = config.num_blocks();
    let c_out = &config.encoder_out_channels;
    let c_last = c_out[n - 1];
    let f_last = config.bottleneck_features();
    let norm = |c: usize| 2 * c;

    let map_in_fnn = f * m + m;
    let map_out_fnn = m * f + f;
    let mapping = norm(1) + map_in_fnn + norm(1) + map_out_fnn;

    let c0 = config.entry_channels;
    let mut core = c0 * config.input_window() * config.entry_freq_kernel + c0 + norm(c0);
    for i in 0..n {
        let c_in = if i == 0 { c0 } else { c_out[i - 1] };
        let k = config.encoder_kernels[i];
        core += c_in * e + e + norm(e);
        core += e * k + e + norm(e);
        core += e * c_out[i] + c_out[i] + norm(c_out[i]);
    }
    core += f_last + 1;
    core += 3 * h * c_last + 3 * h * h + 6 * h;
    core += f_last + f_last;
    for j in 0..n {
        let mirror = n - 1 - j;
        let prev = if j == 0 { h } else { d };
        let k = config.encoder_kernels[mirror];
        core += (prev + c_out[mirror]) * d + d + norm(d);
        core += d * d * k + d + norm(d);
    }
    core += d + 1;
    core += m * a + a + norm(1);
    core += 6 * a * a + 6 * a;
    core += a * m + m + norm(1);
    core += 2 * config.mask_window() * config.mask_freq_kernel + 1;

    Ok(ParamCounts { total: mapping + core, mapping, mapping_fnn: map_in_fnn + map_out_fnn, core })
}

/// Per-step MACs: one per weight multiply. Convolutions count
/// `C_out * F_out * (C_in / groups) * K`, transposed ones
/// `C_in * F_in * (C_out / groups) * K`, GRUs `3H(I + H)`. Norms, activations
/// and the STFT are excluded.
pub fn count_macs(config: &ModelConfig) -> Result<MacBreakdown> {
    config.validate()?;
    let m = config.map_dim;
    let f = config.freq_bins;
    let mut out = MacBreakdown { map_in: (f * m) as u64, map_out: (m * f) as u64, ..Default::default() };

    out.encoder = config.entry_conv().macs(m);
    for i in 0..config.num_blocks() {
        let b = config.encoder_block(i);
        out.encoder += b.expand.macs(b.in_features) + b.depthwise.macs(b.in_features) + b.project.macs(b.out_features);
    }

    // The squeeze/expand pointwise convs run over the swapped layout, so
    // their "feature" axis is the channel count.
    let c_last = *config.encoder_out_channels.last().unwrap();
    out.bottleneck = config.bottleneck_squeeze().macs(c_last)
        + config.bottleneck_gru().macs()
        + config.bottleneck_expand().macs(c_last);

    for d in 0..config.num_blocks() {
        let b = config.decoder_block(d);
        out.decoder += b.fuse.macs(b.in_features) + b.up.macs(b.in_features);
    }
    out.decoder += config.decoder_collapse().macs(m);

    let a = config.ae_hidden;
    out.ae = (m * a) as u64 + config.ae_gru().macs() + (a * m) as u64;
    out.mask_head = config.mask_conv().macs(m);
    Ok(out)
}
