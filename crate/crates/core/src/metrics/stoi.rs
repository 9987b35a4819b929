//! Classic (non-extended) short-time objective intelligibility.
//!
//! Constants are the original ones: 10 kHz analysis rate, 256-sample Hann
//! frames at 50 % overlap with a 512-point FFT, 15 third-octave bands from
//! 150 Hz, 30-frame (384 ms) segments, -15 dB clipping bound and a 40 dB
//! silent-frame threshold taken from the clean signal.

use std::sync::Arc;

use realfft::{RealFftPlanner, RealToComplex};

use super::resample::Resampler;
use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};

pub const STOI_RATE: u32 = 10_000;
const FRAME: usize = 256;
const HOP: usize = FRAME / 2;
const NFFT: usize = 512;
const BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
const SEGMENT: usize = 30;
const BETA_DB: f64 = -15.0;
const DYN_RANGE_DB: f64 = 40.0;
const EPS: f64 = f64::EPSILON;

/// `hanning(FRAME + 2)` without its zero end points.
fn hann() -> Vec<f64> {
    let m = (FRAME + 1) as f64;
    (1..=FRAME).map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / m).cos()).collect()
}

/// Inclusive-exclusive FFT bin range of each third-octave band, with edges
/// snapped to the nearest bin.
fn band_edges() -> Vec<(usize, usize)> {
    let bins = NFFT / 2 + 1;
    let freq = |b: usize| b as f64 * STOI_RATE as f64 / NFFT as f64;
    let nearest = |target: f64| -> usize {
        (0..bins).min_by(|&a, &b| (freq(a) - target).powi(2).total_cmp(&(freq(b) - target).powi(2))).unwrap()
    };
    (0..BANDS)
        .map(|k| {
            let k = k as f64;
            let lo = MIN_FREQ * 2f64.powf((2.0 * k - 1.0) / 6.0);
            let hi = MIN_FREQ * 2f64.powf((2.0 * k + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

/// Frame start positions used both for silence detection and the STFT.
fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    (0..len.saturating_sub(FRAME)).step_by(HOP)
}

/// Drops frames of both signals where the clean one is more than
/// `DYN_RANGE_DB` below its loudest frame, then overlap-adds the rest.
fn remove_silent_frames(x: &[f64], y: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let energy_db: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let e: f64 = (0..FRAME).map(|i| (w[i] * x[s + i]).powi(2)).sum();
            20.0 * (e.sqrt() + EPS).log10()
        })
        .collect();
    let max = energy_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> =
        starts.iter().zip(&energy_db).filter(|(_, &e)| max - DYN_RANGE_DB - e < 0.0).map(|(&s, _)| s).collect();
    if kept.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let len = (kept.len() - 1) * HOP + FRAME;
    let mut xo = vec![0.0; len];
    let mut yo = vec![0.0; len];
    for (f, &s) in kept.iter().enumerate() {
        for i in 0..FRAME {
            xo[f * HOP + i] += w[i] * x[s + i];
            yo[f * HOP + i] += w[i] * y[s + i];
        }
    }
    (xo, yo)
}

/// Third-octave band magnitudes, `[band][frame]`.
fn band_envelopes(x: &[f64], w: &[f64], fft: &Arc<dyn RealToComplex<f64>>, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let mut out = vec![Vec::with_capacity(starts.len()); edges.len()];
    let mut input = fft.make_input_vec();
    let mut spec = fft.make_output_vec();
    for &s in &starts {
        input.fill(0.0);
        for i in 0..FRAME {
            input[i] = w[i] * x[s + i];
        }
        fft.process(&mut input, &mut spec).expect("plan-sized buffers");
        for (b, &(lo, hi)) in edges.iter().enumerate() {
            let e: f64 = spec[lo..hi].iter().map(|c| c.norm_sqr()).sum();
            out[b].push(e.sqrt());
        }
    }
    out
}

/// STOI of `processed` against `clean`, both 48 kHz and equal length.
/// Raw score, roughly in [0, 1]; fewer than 30 non-silent frames is an error.
pub fn stoi(clean: &AudioBuffer, processed: &AudioBuffer) -> Result<f64> {
    if clean.len() != processed.len() {
        return Err(Error::InvalidArgument(format!(
            "clean has {} samples, processed {}",
            clean.len(),
            processed.len()
        )));
    }
    for a in [clean, processed] {
        if a.sample_rate != SAMPLE_RATE && a.sample_rate != STOI_RATE {
            return Err(Error::UnsupportedAudio(format!(
                "STOI takes 48 kHz or 10 kHz input, got {} Hz",
                a.sample_rate
            )));
        }
    }
    let (x, y) = if clean.sample_rate == STOI_RATE {
        (clean.samples.clone(), processed.samples.clone())
    } else {
        let r = Resampler::new(STOI_RATE as usize, SAMPLE_RATE as usize)?;
        (r.process(&clean.samples), r.process(&processed.samples))
    };
    let x: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    stoi_10k(&x, &y)
}

/// STOI on signals already at 10 kHz.
pub fn stoi_10k(x: &[f64], y: &[f64]) -> Result<f64> {
    let w = hann();
    let (x, y) = remove_silent_frames(x, y, &w);
    let fft = RealFftPlanner::<f64>::new().plan_fft_forward(NFFT);
    let edges = band_edges();
    let xb = band_envelopes(&x, &w, &fft, &edges);
    let yb = band_envelopes(&y, &w, &fft, &edges);
    let frames = xb[0].len();
    if frames < SEGMENT {
        return Err(Error::TooShort(format!("{frames} non-silent analysis frames, STOI needs at least {SEGMENT}")));
    }
    let clip = 10f64.powf(-BETA_DB / 20.0);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let segments = frames - SEGMENT + 1;
    let mut total = 0.0;
    for m in 0..segments {
        for b in 0..BANDS {
            let xs = &xb[b][m..m + SEGMENT];
            let ys = &yb[b][m..m + SEGMENT];
            let scale = norm(xs) / (norm(ys) + EPS);
            let mut yp: Vec<f64> = ys.iter().zip(xs).map(|(&yv, &xv)| (yv * scale).min(xv * (1.0 + clip))).collect();
            let mut xc = xs.to_vec();
            for v in [&mut yp, &mut xc] {
                let mean = v.iter().sum::<f64>() / SEGMENT as f64;
                v.iter_mut().for_each(|a| *a -= mean);
                let n = norm(v) + EPS;
                v.iter_mut().for_each(|a| *a /= n);
            }
            total += yp.iter().zip(&xc).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(total / (segments * BANDS) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_edges_match_reference_table() {
        // Nearest-bin snapping at 10 kHz / 512 points (19.53 Hz per bin).
        let want = [
            (7, 9),
            (9, 11),
            (11, 14),
            (14, 17),
            (17, 22),
            (22, 27),
            (27, 34),
            (34, 43),
            (43, 55),
            (55, 69),
            (69, 87),
            (87, 109),
            (109, 138),
            (138, 174),
            (174, 219),
        ];
        assert_eq!(band_edges(), want);
    }

    #[test]
    fn window_is_symmetric_and_positive() {
        let w = hann();
        assert_eq!(w.len(), FRAME);
        assert!(w.iter().all(|&v| v > 0.0));
        for i in 0..FRAME {
            assert!((w[i] - w[FRAME - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn too_short_is_an_error() {
        let x: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.3).sin()).collect();
        assert!(matches!(stoi_10k(&x, &x), Err(Error::TooShort(_))));
    }
}
