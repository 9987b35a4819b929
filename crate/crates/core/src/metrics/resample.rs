use std::f64::consts::PI;

use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Rational polyphase resampler with a Kaiser-windowed sinc low-pass.
///
/// The filter follows the common Octave `resample` design: cutoff at the
/// lower Nyquist rate, 60 dB rejection, roll-off a tenth of the cutoff. It is
/// centered so the output has no group delay and scaled to unit DC gain.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: usize,
    down: usize,
    half_len: usize,
    /// `phases[r]`: `(k, h[k])` for every filter offset `k ≡ r (mod up)`.
    phases: Vec<Vec<(isize, f64)>>,
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Resampler {
    pub fn new(up: usize, down: usize) -> Result<Self> {
        if up == 0 || down == 0 {
            return Err(Error::InvalidArgument("resampling factors must be positive".into()));
        }
        let g = gcd(up, down);
        let (up, down) = (up / g, down / g);
        let rejection_db = 60.0;
        // Cutoff in cycles per upsampled sample.
        let fc = 0.5 / up.max(down) as f64;
        let half_len = ((rejection_db - 8.0) / (28.714 * fc / 10.0)).ceil() as usize;
        let beta = 0.1102 * (rejection_db - 8.7);
        let l = half_len as isize;
        let denom = bessel_i0(beta);
        let h: Vec<f64> = (-l..=l)
            .map(|k| {
                let t = k as f64;
                let x = 2.0 * fc * t;
                let sinc = if k == 0 { 1.0 } else { (PI * x).sin() / (PI * x) };
                let r = t / half_len as f64;
                let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom;
                sinc * w
            })
            .collect();
        let gain = up as f64 / h.iter().sum::<f64>();
        // Output m reads upsampled index n0 = down * m; tap k pairs with input
        // j = (n0 - k) / up, so only k ≡ n0 (mod up) contribute.
        let mut phases = vec![Vec::new(); up];
        for (i, &c) in h.iter().enumerate() {
            let k = i as isize - l;
            phases[k.rem_euclid(up as isize) as usize].push((k, c * gain));
        }
        Ok(Self { up, down, half_len, phases })
    }

    pub fn half_len(&self) -> usize {
        self.half_len
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len * self.up).div_ceil(self.down)
    }

    pub fn process(&self, x: &[f32]) -> Vec<f32> {
        let up = self.up as isize;
        let n_out = self.output_len(x.len());
        let mut y = Vec::with_capacity(n_out);
        for m in 0..n_out {
            let n0 = (self.down * m) as isize;
            let taps = &self.phases[n0.rem_euclid(up) as usize];
            let mut acc = 0.0f64;
            for &(k, c) in taps {
                let j = (n0 - k) / up;
                if j >= 0 && (j as usize) < x.len() {
                    acc += c * x[j as usize] as f64;
                }
            }
            y.push(acc as f32);
        }
        y
    }
}

/// 48 kHz to 10 kHz (ratio 5/24), low-pass at 5 kHz.
pub fn resample_48k_to_10k(audio: &AudioBuffer) -> Result<AudioBuffer> {
    if audio.sample_rate != SAMPLE_RATE {
        return Err(Error::UnsupportedAudio(format!("expected {SAMPLE_RATE} Hz input, got {} Hz", audio.sample_rate)));
    }
    let r = Resampler::new(10_000, SAMPLE_RATE as usize)?;
    AudioBuffer::new(r.process(&audio.samples), 10_000)
}
