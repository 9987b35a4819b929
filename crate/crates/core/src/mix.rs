//! Noisy-mixture synthesis: noise at an integer SNR, peak-normalized.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};

pub const SNR_RANGE_DB: (i32, i32) = (-10, 25);
pub const PEAK_RANGE: (f32, f32) = (0.001, 0.999);
pub const MAX_NOISES: usize = 2;
pub const SEGMENT_SECS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixSpec {
    pub snr_db: i32,
    pub peak: f32,
    /// Drives the noise crop offsets.
    pub seed: u64,
}

impl MixSpec {
    /// SNR and peak drawn uniformly from their allowed ranges.
    pub fn sample(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d69_7873_7065_6321);
        Self {
            snr_db: rng.gen_range(SNR_RANGE_DB.0..=SNR_RANGE_DB.1),
            peak: rng.gen_range(PEAK_RANGE.0..=PEAK_RANGE.1),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(SNR_RANGE_DB.0..=SNR_RANGE_DB.1).contains(&self.snr_db) {
            return Err(Error::InvalidArgument(format!(
                "SNR {} dB outside [{}, {}]",
                self.snr_db, SNR_RANGE_DB.0, SNR_RANGE_DB.1
            )));
        }
        if !(PEAK_RANGE.0..=PEAK_RANGE.1).contains(&self.peak) {
            return Err(Error::InvalidArgument(format!(
                "peak {} outside [{}, {}]",
                self.peak, PEAK_RANGE.0, PEAK_RANGE.1
            )));
        }
        Ok(())
    }
}

/// The mixture and its exact components: `mixture = clean + noise`
/// sample for sample (up to f32 rounding).
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub mixture: AudioBuffer,
    pub clean: AudioBuffer,
    pub noise: AudioBuffer,
    pub spec: MixSpec,
}

fn power(x: &[f32]) -> f64 {
    x.iter().map(|&v| v as f64 * v as f64).sum::<f64>() / x.len() as f64
}

/// Fits `noise` to `len` samples: a seeded random crop when longer, tiled
/// when shorter.
fn fit_noise(noise: &[f32], len: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    if noise.len() >= len {
        let start = rng.gen_range(0..=noise.len() - len);
        noise[start..start + len].to_vec()
    } else {
        noise.iter().copied().cycle().take(len).collect()
    }
}

pub fn mix(clean: &AudioBuffer, noises: &[AudioBuffer], spec: &MixSpec) -> Result<Mixture> {
    spec.validate()?;
    if noises.is_empty() || noises.len() > MAX_NOISES {
        return Err(Error::InvalidArgument(format!("need 1 to {MAX_NOISES} noise signals, got {}", noises.len())));
    }
    for a in std::iter::once(clean).chain(noises) {
        if a.sample_rate != SAMPLE_RATE {
            return Err(Error::UnsupportedAudio(format!("expected {SAMPLE_RATE} Hz, got {} Hz", a.sample_rate)));
        }
        if a.is_empty() {
            return Err(Error::InvalidArgument("empty input signal".into()));
        }
    }
    let len = clean.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noise = vec![0.0f32; len];
    for n in noises {
        for (acc, v) in noise.iter_mut().zip(fit_noise(&n.samples, len, &mut rng)) {
            *acc += v;
        }
    }

    let pc = power(&clean.samples);
    let pn = power(&noise);
    if pc == 0.0 {
        return Err(Error::CannotSetSnr("clean signal"));
    }
    if pn == 0.0 {
        return Err(Error::CannotSetSnr("noise"));
    }
    let gain = (pc / (pn * 10f64.powf(spec.snr_db as f64 / 10.0))).sqrt();
    let scaled: Vec<f64> = noise.iter().map(|&v| v as f64 * gain).collect();
    let mixed: Vec<f64> = clean.samples.iter().zip(&scaled).map(|(&c, &n)| c as f64 + n).collect();
    let peak = mixed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::CannotSetSnr("mixture"));
    }
    let norm = spec.peak as f64 / peak;
    let to_f32 = |xs: &mut dyn Iterator<Item = f64>| -> Vec<f32> { xs.map(|v| (v * norm) as f32).collect() };
    Ok(Mixture {
        mixture: AudioBuffer::new(to_f32(&mut mixed.iter().copied()), SAMPLE_RATE)?,
        clean: AudioBuffer::new(to_f32(&mut clean.samples.iter().map(|&v| v as f64)), SAMPLE_RATE)?,
        noise: AudioBuffer::new(to_f32(&mut scaled.iter().copied()), SAMPLE_RATE)?,
        spec: *spec,
    })
}

/// Cuts a signal into `SEGMENT_SECS` pieces, zero-padding at the start so
/// the last piece ends exactly at the end of the signal.
pub fn segment(audio: &AudioBuffer) -> Vec<AudioBuffer> {
    let seg = SEGMENT_SECS * audio.sample_rate as usize;
    let total = audio.len().div_ceil(seg).max(1) * seg;
    let mut padded = vec![0.0f32; total - audio.len()];
    padded.extend_from_slice(&audio.samples);
    padded.chunks(seg).map(|c| AudioBuffer { samples: c.to_vec(), sample_rate: audio.sample_rate }).collect()
}
