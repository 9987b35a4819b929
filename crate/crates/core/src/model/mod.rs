//! The causal mask estimator: one magnitude frame in, one gain mask out.
//!
//! Pipeline per frame:
//! `map_in -> encoder -> bottleneck -> decoder -> ae -> mask_head -> map_out`.
//! All look-back lives in [`StreamState`]; [`Model`] is immutable.

mod config;
mod state;
mod trace;

pub use config::{DecoderBlockSpec, EncoderBlockSpec, ModelConfig};
pub use state::{History, StreamState};
pub use trace::{ActivationTrace, TracedTensor};

use crate::dsp::{apply_mask, SpectralFrame, WindowSpec};
use crate::error::{shape_err, Error, Result};
use crate::nn::{
    hard_swish_inplace, sigmoid_inplace, Conv1d, Conv2d, Conv2dSpec, ConvSpec, GruCell, GruSpec, GruState,
    InstanceNorm, Linear, Tensor2, Tensor3,
};
use crate::weights::ModelWeights;

#[derive(Debug, Clone)]
struct MapIn {
    norm_in: InstanceNorm,
    fc: Linear,
    norm_out: InstanceNorm,
}

#[derive(Debug, Clone)]
struct EncoderBlock {
    expand: Conv1d,
    expand_norm: InstanceNorm,
    depthwise: Conv1d,
    depthwise_norm: InstanceNorm,
    project: Conv1d,
    project_norm: InstanceNorm,
}

#[derive(Debug, Clone)]
struct DecoderBlock {
    fuse: Conv1d,
    fuse_norm: InstanceNorm,
    up: Conv1d,
    up_norm: InstanceNorm,
    skip_from: usize,
}

#[derive(Debug, Clone)]
struct AutoEncoder {
    down: Linear,
    down_norm: InstanceNorm,
    gru: GruCell,
    up: Linear,
    up_norm: InstanceNorm,
}

/// Per-frame output of [`Model::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub mask: Vec<f32>,
    pub denoised: SpectralFrame,
}

#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    map_in: MapIn,
    entry: Conv2d,
    entry_norm: InstanceNorm,
    encoder: Vec<EncoderBlock>,
    squeeze: Conv1d,
    bottleneck_gru: GruCell,
    expand: Conv1d,
    decoder: Vec<DecoderBlock>,
    collapse: Conv1d,
    ae: AutoEncoder,
    mask: Conv2d,
    map_out: Linear,
}

struct Loader<'a> {
    w: &'a ModelWeights,
    eps: f32,
}

impl Loader<'_> {
    fn linear(&self, p: &str, i: usize, o: usize) -> Result<Linear> {
        let w = self.w.expect(&format!("{p}.weight"), &[o, i])?;
        let b = self.w.expect(&format!("{p}.bias"), &[o])?;
        Linear::new(i, o, w, b)
    }

    fn conv(&self, p: &str, spec: ConvSpec) -> Result<Conv1d> {
        let w = self.w.expect(&format!("{p}.weight"), &spec.weight_shape())?;
        let b = self.w.expect(&format!("{p}.bias"), &[spec.out_channels])?;
        Conv1d::new(spec, w, b)
    }

    fn conv2d(&self, p: &str, spec: Conv2dSpec) -> Result<Conv2d> {
        let w = self.w.expect(&format!("{p}.weight"), &spec.weight_shape())?;
        let b = self.w.expect(&format!("{p}.bias"), &[spec.out_channels])?;
        Conv2d::new(spec, w, b)
    }

    fn norm(&self, p: &str, channels: usize) -> Result<InstanceNorm> {
        let g = self.w.expect(&format!("{p}.gamma"), &[channels])?;
        let b = self.w.expect(&format!("{p}.beta"), &[channels])?;
        InstanceNorm::new(g, b, self.eps)
    }

    fn gru(&self, p: &str, spec: GruSpec) -> Result<GruCell> {
        let g = 3 * spec.hidden_size;
        GruCell::new(
            spec,
            self.w.expect(&format!("{p}.w_ih"), &spec.input_weight_shape())?,
            self.w.expect(&format!("{p}.w_hh"), &spec.hidden_weight_shape())?,
            self.w.expect(&format!("{p}.b_ih"), &[g])?,
            self.w.expect(&format!("{p}.b_hh"), &[g])?,
        )
    }
}

impl Model {
    /// Builds the network. The weight set must match the config's layout
    /// exactly; extra or missing tensors are rejected.
    pub fn from_weights(config: &ModelConfig, weights: &ModelWeights) -> Result<Self> {
        weights.validate(config)?;
        let l = Loader { w: weights, eps: config.norm_eps };
        let (f, m) = (config.freq_bins, config.map_dim);

        let map_in = MapIn {
            norm_in: l.norm("map_in.norm_in", 1)?,
            fc: l.linear("map_in.fc", f, m)?,
            norm_out: l.norm("map_in.norm_out", 1)?,
        };
        let entry_spec = config.entry_conv();
        let encoder = (0..config.num_blocks())
            .map(|i| {
                let s = config.encoder_block(i);
                let p = format!("encoder.block{i}");
                Ok(EncoderBlock {
                    expand: l.conv(&format!("{p}.expand"), s.expand)?,
                    expand_norm: l.norm(&format!("{p}.expand_norm"), s.expand.out_channels)?,
                    depthwise: l.conv(&format!("{p}.depthwise"), s.depthwise)?,
                    depthwise_norm: l.norm(&format!("{p}.depthwise_norm"), s.depthwise.out_channels)?,
                    project: l.conv(&format!("{p}.project"), s.project)?,
                    project_norm: l.norm(&format!("{p}.project_norm"), s.project.out_channels)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let decoder = (0..config.num_blocks())
            .map(|d| {
                let s = config.decoder_block(d);
                let p = format!("decoder.block{d}");
                Ok(DecoderBlock {
                    fuse: l.conv(&format!("{p}.fuse"), s.fuse)?,
                    fuse_norm: l.norm(&format!("{p}.fuse_norm"), s.fuse.out_channels)?,
                    up: l.conv(&format!("{p}.up"), s.up)?,
                    up_norm: l.norm(&format!("{p}.up_norm"), s.up.out_channels)?,
                    skip_from: s.skip_from,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ae = AutoEncoder {
            down: l.linear("ae.down", m, config.ae_hidden)?,
            down_norm: l.norm("ae.down_norm", 1)?,
            gru: l.gru("ae.gru", config.ae_gru())?,
            up: l.linear("ae.up", config.ae_hidden, m)?,
            up_norm: l.norm("ae.up_norm", 1)?,
        };

        Ok(Self {
            config: config.clone(),
            map_in,
            entry: l.conv2d("encoder.entry", entry_spec)?,
            entry_norm: l.norm("encoder.entry.norm", entry_spec.out_channels)?,
            encoder,
            squeeze: l.conv("bottleneck.squeeze", config.bottleneck_squeeze())?,
            bottleneck_gru: l.gru("bottleneck.gru", config.bottleneck_gru())?,
            expand: l.conv("bottleneck.expand", config.bottleneck_expand())?,
            decoder,
            collapse: l.conv("decoder.collapse", config.decoder_collapse())?,
            ae,
            mask: l.conv2d("mask.conv", config.mask_conv())?,
            map_out: l.linear("map_out.fc", m, f)?,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Fresh, zero-initialized state for a stream framed with `window`.
    pub fn new_state(&self, window: &WindowSpec) -> StreamState {
        StreamState::new(&self.config, window)
    }

    /// Normalize, project `F -> F'`, normalize, hard-swish.
    pub fn map_in(&self, magnitude: &[f32]) -> Result<Vec<f32>> {
        if magnitude.len() != self.config.freq_bins {
            return Err(shape_err("map_in input", self.config.freq_bins, magnitude.len()));
        }
        if let Some((k, v)) = magnitude.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("magnitude[{k}] = {v} must be finite and non-negative")));
        }
        let mut x = magnitude.to_vec();
        self.map_in.norm_in.forward_vector(&mut x)?;
        let mut h = self.map_in.fc.forward(&x)?;
        self.map_in.norm_out.forward_vector(&mut h)?;
        hard_swish_inplace(&mut h);
        Ok(h)
    }

    /// Entry conv over the look-back window, then the inverted-bottleneck
    /// blocks. Returns the last block's output and every block's output.
    pub fn encoder(&self, in_pad: &Tensor3) -> Result<(Tensor2, Vec<Tensor2>)> {
        let mut x = self.entry.forward(in_pad)?;
        self.entry_norm.forward_inplace(&mut x)?;
        hard_swish_inplace(x.data_mut());
        let mut skips = Vec::with_capacity(self.encoder.len());
        for b in &self.encoder {
            let mut y = b.expand.forward(&x)?;
            b.expand_norm.forward_inplace(&mut y)?;
            hard_swish_inplace(y.data_mut());
            let mut y = b.depthwise.forward(&y)?;
            b.depthwise_norm.forward_inplace(&mut y)?;
            hard_swish_inplace(y.data_mut());
            let mut y = b.project.forward(&y)?;
            b.project_norm.forward_inplace(&mut y)?;
            skips.push(y.clone());
            x = y;
        }
        Ok((x, skips))
    }

    /// Swap axes, squeeze features to one, GRU over channels, expand back.
    pub fn bottleneck(&self, h_e: &Tensor2, gru: &mut GruState) -> Result<Tensor2> {
        let want = (self.config.bottleneck_hidden, self.config.bottleneck_features());
        if h_e.shape() != want {
            return Err(shape_err("bottleneck input", format!("{want:?}"), format!("{:?}", h_e.shape())));
        }
        let squeezed = self.squeeze.forward(&h_e.transpose())?;
        self.bottleneck_gru.step(squeezed.data(), gru)?;
        let expanded = self.expand.forward(&Tensor2::from_vector(gru.hidden.clone()))?;
        Ok(expanded.transpose())
    }

    /// Skip-fused transposed-conv stack back to `F'`, collapsed to one channel.
    pub fn decoder(&self, h_b: &Tensor2, skips: &[Tensor2]) -> Result<Vec<f32>> {
        if skips.len() != self.encoder.len() {
            return Err(shape_err("decoder skips", self.encoder.len(), skips.len()));
        }
        let mut x = h_b.clone();
        for b in &self.decoder {
            let skip = &skips[b.skip_from];
            if skip.features() != x.features() {
                return Err(shape_err("decoder skip features", x.features(), skip.features()));
            }
            let mut y = b.fuse.forward(&x.concat_channels(skip)?)?;
            b.fuse_norm.forward_inplace(&mut y)?;
            hard_swish_inplace(y.data_mut());
            let mut y = b.up.forward(&y)?;
            b.up_norm.forward_inplace(&mut y)?;
            hard_swish_inplace(y.data_mut());
            x = y;
        }
        Ok(self.collapse.forward(&x)?.into_data())
    }

    /// Reduce, GRU, restore. Only the first affine has a nonlinearity.
    pub fn ae(&self, h_d: &[f32], gru: &mut GruState) -> Result<Vec<f32>> {
        let mut v = self.ae.down.forward(h_d)?;
        self.ae.down_norm.forward_vector(&mut v)?;
        hard_swish_inplace(&mut v);
        self.ae.gru.step(&v, gru)?;
        let mut out = self.ae.up.forward(&gru.hidden)?;
        self.ae.up_norm.forward_vector(&mut out)?;
        Ok(out)
    }

    /// Two-channel conv over the stacked Map_in and AE histories, each
    /// `(T_M + 1) x F'` and oldest first. No norm or activation.
    pub fn mask_head(&self, in_hist: &[f32], ae_hist: &[f32]) -> Result<Vec<f32>> {
        let n = self.config.mask_window() * self.config.map_dim;
        if in_hist.len() != n || ae_hist.len() != n {
            return Err(shape_err("mask head history", n, in_hist.len().max(ae_hist.len())));
        }
        let mut data = Vec::with_capacity(2 * n);
        data.extend_from_slice(in_hist);
        data.extend_from_slice(ae_hist);
        let x = Tensor3::new(2, self.config.mask_window(), self.config.map_dim, data)?;
        Ok(self.mask.forward(&x)?.into_data())
    }

    /// Project `F' -> F` and squash into [0, 1].
    pub fn map_out(&self, h_m: &[f32]) -> Result<Vec<f32>> {
        let mut m = self.map_out.forward(h_m)?;
        sigmoid_inplace(&mut m);
        Ok(m)
    }

    /// Everything between the mappings for one frame, given explicit
    /// histories, all oldest first: `in_window` is the last `T_pad + 1`
    /// Map_in outputs, `in_hist` the last `T_M + 1`, `ae_prev` the last `T_M`
    /// AE outputs. Returns `(H^AE, H^M)`.
    fn forward_core(
        &self,
        in_window: Vec<f32>,
        in_hist: &[f32],
        ae_prev: &[f32],
        bottleneck_gru: &mut GruState,
        ae_gru: &mut GruState,
        mut trace: Option<&mut ActivationTrace>,
    ) -> Result<(Vec<f32>, Vec<f32>)> {
        let (tw, m) = (self.config.input_window(), self.config.map_dim);
        let in_pad = Tensor3::new(1, tw, m, in_window)?;
        if let Some(t) = trace.as_deref_mut() {
            t.record("in_pad", vec![tw, m], in_pad.data());
        }
        let (h_e, skips) = self.encoder(&in_pad)?;
        let h_b = self.bottleneck(&h_e, bottleneck_gru)?;
        let h_d = self.decoder(&h_b, &skips)?;
        let h_ae = self.ae(&h_d, ae_gru)?;
        let mut ae_hist = Vec::with_capacity(ae_prev.len() + m);
        ae_hist.extend_from_slice(ae_prev);
        ae_hist.extend_from_slice(&h_ae);
        let h_m = self.mask_head(in_hist, &ae_hist)?;
        if let Some(t) = trace {
            for (i, s) in skips.iter().enumerate() {
                t.record(format!("skip{i}"), vec![s.channels(), s.features()], s.data());
            }
            t.record("encoder", vec![h_e.channels(), h_e.features()], h_e.data());
            t.record("bottleneck", vec![h_b.channels(), h_b.features()], h_b.data());
            t.record("decoder", vec![m], &h_d);
            t.record("ae", vec![m], &h_ae);
            t.record("mask_head", vec![m], &h_m);
        }
        Ok((h_ae, h_m))
    }

    /// Pushes one Map_in output through the core and returns `H^M`.
    fn advance(&self, h_in: &[f32], state: &mut StreamState, trace: Option<&mut ActivationTrace>) -> Result<Vec<f32>> {
        state.check(&self.config)?;
        let c = &self.config;
        if h_in.len() != c.map_dim {
            return Err(shape_err("core input", c.map_dim, h_in.len()));
        }
        state.map_in.push(h_in);
        let mut in_window = Vec::with_capacity(c.input_window() * c.map_dim);
        state.map_in.extend_recent(c.input_window(), &mut in_window);
        let mut in_hist = Vec::with_capacity(c.mask_window() * c.map_dim);
        state.map_in.extend_recent(c.mask_window(), &mut in_hist);
        let mut ae_prev = Vec::with_capacity(c.mask_lookback * c.map_dim);
        state.ae.extend_recent(c.mask_lookback, &mut ae_prev);
        let (h_ae, h_m) =
            self.forward_core(in_window, &in_hist, &ae_prev, &mut state.bottleneck_gru, &mut state.ae_gru, trace)?;
        state.ae.push(&h_ae);
        state.frames += 1;
        Ok(h_m)
    }

    /// One streaming step: mask estimation and masking. The returned frame
    /// keeps the noisy phase.
    pub fn step(&self, noisy: &SpectralFrame, state: &mut StreamState) -> Result<StepOutput> {
        let mask = self.step_mask(&noisy.magnitude, state)?;
        let denoised = apply_mask(noisy, &mask)?;
        Ok(StepOutput { mask, denoised })
    }

    /// Mask for one magnitude frame, advancing the stream state.
    pub fn step_mask(&self, magnitude: &[f32], state: &mut StreamState) -> Result<Vec<f32>> {
        let h_in = self.map_in(magnitude)?;
        let h_m = self.advance(&h_in, state, None)?;
        self.map_out(&h_m)
    }

    /// The core alone (no input or output mapping): takes an `F'` vector
    /// in Map_in's output space and returns the mask head's `F'` output.
    pub fn step_core(&self, h_in: &[f32], state: &mut StreamState) -> Result<Vec<f32>> {
        self.advance(h_in, state, None)
    }

    /// [`Self::step_mask`] that also records every intermediate tensor.
    pub fn step_traced(&self, magnitude: &[f32], state: &mut StreamState) -> Result<(Vec<f32>, ActivationTrace)> {
        let mut trace = ActivationTrace::new();
        let h_in = self.map_in(magnitude)?;
        trace.record("map_in", vec![h_in.len()], &h_in);
        let h_m = self.advance(&h_in, state, Some(&mut trace))?;
        let mask = self.map_out(&h_m)?;
        trace.record("mask", vec![mask.len()], &mask);
        Ok((mask, trace))
    }

    /// Batch evaluation of a whole utterance of magnitude frames. Computes
    /// the same causal recurrence as repeated [`Self::step_mask`] from a
    /// fresh state, indexing past frames directly instead of through rings.
    pub fn process_offline(&self, frames: &[Vec<f32>]) -> Result<Vec<Vec<f32>>> {
        let c = &self.config;
        let m = c.map_dim;
        let h_in: Vec<Vec<f32>> = frames.iter().map(|f| self.map_in(f)).collect::<Result<_>>()?;
        let zeros = vec![0.0f32; m];
        let past = |seq: &[Vec<f32>], t: usize, rows: usize, out: &mut Vec<f32>| {
            // Rows t+1-rows ..= t, zero before the first frame.
            for j in 0..rows {
                let back = rows - 1 - j;
                out.extend_from_slice(if back <= t { &seq[t - back] } else { &zeros });
            }
        };
        let mut bottleneck_gru = GruState::zeros(c.bottleneck_hidden);
        let mut ae_gru = GruState::zeros(c.ae_hidden);
        let mut h_ae: Vec<Vec<f32>> = Vec::with_capacity(frames.len());
        let mut masks = Vec::with_capacity(frames.len());
        for t in 0..frames.len() {
            let mut in_window = Vec::with_capacity(c.input_window() * m);
            past(&h_in, t, c.input_window(), &mut in_window);
            let mut in_hist = Vec::with_capacity(c.mask_window() * m);
            past(&h_in, t, c.mask_window(), &mut in_hist);
            let mut ae_prev = Vec::with_capacity(c.mask_lookback * m);
            for back in (1..=c.mask_lookback).rev() {
                ae_prev.extend_from_slice(if back <= t { &h_ae[t - back] } else { &zeros });
            }
            let (a, h_m) = self.forward_core(in_window, &in_hist, &ae_prev, &mut bottleneck_gru, &mut ae_gru, None)?;
            h_ae.push(a);
            masks.push(self.map_out(&h_m)?);
        }
        Ok(masks)
    }
}
