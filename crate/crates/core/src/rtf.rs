//! Real-time-factor measurement for the streaming step.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::audio::SAMPLE_RATE;
use crate::dsp::{OlaState, Stft, WindowSpec};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RtfConfig {
    /// Timed passes; each covers `hops_per_pass` streaming steps.
    pub passes: usize,
    /// One step per pass by default; 47 hops is one second of audio at the
    /// default framing.
    pub hops_per_pass: usize,
    /// Untimed passes before measurement.
    pub warmup: usize,
    /// Time STFT analysis and synthesis along with the network.
    pub include_dsp: bool,
    pub seed: u64,
}

impl Default for RtfConfig {
    fn default() -> Self {
        Self { passes: 100, hops_per_pass: 1, warmup: 10, include_dsp: false, seed: 0 }
    }
}

/// Wall-clock statistics over passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub mean_secs: f64,
    pub median_secs: f64,
    /// Mean pass time over the audio duration of one pass.
    pub rtf: f64,
}

impl Timing {
    fn from_samples(samples: &mut [Duration], audio_secs: f64) -> Self {
        samples.sort_unstable();
        let mean_secs = samples.iter().map(Duration::as_secs_f64).sum::<f64>() / samples.len() as f64;
        let n = samples.len();
        let median_secs = if n % 2 == 1 {
            samples[n / 2].as_secs_f64()
        } else {
            (samples[n / 2 - 1].as_secs_f64() + samples[n / 2].as_secs_f64()) / 2.0
        };
        Self { mean_secs, median_secs, rtf: mean_secs / audio_secs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RtfReport {
    pub passes: usize,
    pub hops_per_pass: usize,
    pub include_dsp: bool,
    /// Audio duration covered by one pass.
    pub pass_secs: f64,
    pub with_mapping: Timing,
    pub without_mapping: Timing,
}

/// Times the streaming step with and without the mapping sub-modules on
/// seeded random input. The two variants are interleaved step by step,
/// alternating which goes first, so drift in machine load hits both
/// equally. The core-only variant starts from precomputed Map_in outputs.
pub fn measure_rtf(model: &Model, cfg: &RtfConfig) -> Result<RtfReport> {
    if cfg.passes == 0 || cfg.hops_per_pass == 0 {
        return Err(Error::InvalidArgument("need at least one timed pass of at least one hop".into()));
    }
    let c = model.config();
    let window = WindowSpec::sqrt_hann((c.freq_bins - 1) * 2)?;
    let stft = Stft::new(window.clone());
    let n = window.fft_size();
    let hop = window.hop();
    let k = cfg.hops_per_pass;
    let pass_secs = (k * hop) as f64 / SAMPLE_RATE as f64;

    // One pass worth of input, replayed every pass while the state runs on.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let audio: Vec<f32> = (0..n + k * hop).map(|_| rng.gen_range(-0.5f32..0.5)).collect();
    let chunk = |i: usize| &audio[i * hop..i * hop + n];
    let frames = (0..k).map(|i| stft.analyze_frame(chunk(i))).collect::<Result<Vec<_>>>()?;
    let core_inputs = frames.iter().map(|f| model.map_in(&f.magnitude)).collect::<Result<Vec<_>>>()?;

    let mut state_w = model.new_state(&window);
    let mut state_wo = model.new_state(&window);
    let mut ola_wo = OlaState::new(&window);
    let mut out = vec![0.0f32; hop];
    let mut with = Vec::with_capacity(cfg.passes);
    let mut without = Vec::with_capacity(cfg.passes);

    for pass in 0..cfg.warmup + cfg.passes {
        let (mut dw, mut dwo) = (Duration::ZERO, Duration::ZERO);
        for i in 0..k {
            let mut run_with = |out: &mut [f32]| -> Result<Duration> {
                let t0 = Instant::now();
                if cfg.include_dsp {
                    let frame = stft.analyze_frame(chunk(i))?;
                    let step = model.step(&frame, &mut state_w)?;
                    stft.synthesize_frame(&step.denoised, state_w.ola_mut(), out)?;
                } else {
                    std::hint::black_box(model.step_mask(&frames[i].magnitude, &mut state_w)?);
                }
                Ok(t0.elapsed())
            };
            let mut run_without = |out: &mut [f32]| -> Result<Duration> {
                let t0 = Instant::now();
                if cfg.include_dsp {
                    let frame = stft.analyze_frame(chunk(i))?;
                    std::hint::black_box(model.step_core(&core_inputs[i], &mut state_wo)?);
                    stft.synthesize_frame(&frame, &mut ola_wo, out)?;
                } else {
                    std::hint::black_box(model.step_core(&core_inputs[i], &mut state_wo)?);
                }
                Ok(t0.elapsed())
            };
            if (pass * k + i) % 2 == 0 {
                dw += run_with(&mut out)?;
                dwo += run_without(&mut out)?;
            } else {
                dwo += run_without(&mut out)?;
                dw += run_with(&mut out)?;
            }
        }
        if pass >= cfg.warmup {
            with.push(dw);
            without.push(dwo);
        }
    }

    Ok(RtfReport {
        passes: cfg.passes,
        hops_per_pass: k,
        include_dsp: cfg.include_dsp,
        pass_secs,
        with_mapping: Timing::from_samples(&mut with, pass_secs),
        without_mapping: Timing::from_samples(&mut without, pass_secs),
    })
}
