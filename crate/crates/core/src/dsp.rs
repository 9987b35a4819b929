//! STFT analysis, magnitude masking and overlap-add synthesis.
//!
//! Framing is causal: the signal is left-padded with `fft_size - hop` zeros,
//! so frame `t` ends at sample `(t + 1) * hop` and never sees later input.
//! Analysis and synthesis both use a periodic square-root Hann window, whose
//! squared shifts sum to exactly one at 50% overlap, so an unmodified
//! spectrum reconstructs the input without any extra normalization.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex32;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::audio::AudioBuffer;
use crate::error::{shape_err, Error, Result};

pub const FFT_SIZE: usize = 2048;
pub const HOP: usize = FFT_SIZE / 2;
pub const FREQ_BINS: usize = FFT_SIZE / 2 + 1;

#[derive(Debug, Clone)]
pub struct WindowSpec {
    fft_size: usize,
    hop: usize,
    /// Design values, used for the COLA check.
    design: Vec<f64>,
    window: Vec<f32>,
}

impl WindowSpec {
    /// Periodic square-root Hann window with 50% overlap.
    pub fn sqrt_hann(fft_size: usize) -> Result<Self> {
        if fft_size < 4 || fft_size % 2 != 0 {
            return Err(Error::InvalidArgument(format!("fft size must be even and >= 4, got {fft_size}")));
        }
        let design: Vec<f64> =
            (0..fft_size).map(|n| (0.5 - 0.5 * (2.0 * PI * n as f64 / fft_size as f64).cos()).sqrt()).collect();
        Self::from_design(fft_size, design)
    }

    /// Builds a window from explicit values, rejecting any that breaks the
    /// 50%-overlap COLA condition.
    pub fn from_design(fft_size: usize, design: Vec<f64>) -> Result<Self> {
        if design.len() != fft_size {
            return Err(shape_err("window", fft_size, design.len()));
        }
        if design.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("window values must be finite and non-negative".into()));
        }
        let spec = Self { fft_size, hop: fft_size / 2, window: design.iter().map(|&w| w as f32).collect(), design };
        let dev = spec.cola_deviation();
        if dev > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "window violates COLA at 50% overlap (relative deviation {dev:.3e})"
            )));
        }
        Ok(spec)
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn values(&self) -> &[f32] {
        &self.window
    }

    /// Maximum relative deviation of `sum_m w[n - mH]^2` from its mean over
    /// one hop of the steady-state region.
    pub fn cola_deviation(&self) -> f64 {
        let sums: Vec<f64> = (0..self.hop)
            .map(|n| (0..self.fft_size / self.hop).map(|m| self.design[n + m * self.hop].powi(2)).sum())
            .collect();
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        sums.iter().map(|s| (s - mean).abs() / mean).fold(0.0, f64::max)
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self::sqrt_hann(FFT_SIZE).expect("default window is valid")
    }
}

/// One STFT frame split into magnitude and phase.
#[derive(Clone, PartialEq)]
pub struct SpectralFrame {
    pub magnitude: Vec<f32>,
    pub phase: Vec<f32>,
}

impl SpectralFrame {
    pub fn zeros(bins: usize) -> Self {
        Self { magnitude: vec![0.0; bins], phase: vec![0.0; bins] }
    }

    pub fn bins(&self) -> usize {
        self.magnitude.len()
    }
}

impl fmt::Debug for SpectralFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralFrame").field("bins", &self.bins()).finish()
    }
}

/// Samples still owed to future output hops by previous synthesis frames.
#[derive(Debug, Clone, PartialEq)]
pub struct OlaState {
    tail: Vec<f32>,
}

impl OlaState {
    pub fn new(window: &WindowSpec) -> Self {
        Self { tail: vec![0.0; window.fft_size - window.hop] }
    }

    pub fn tail(&self) -> &[f32] {
        &self.tail
    }

    pub fn reset(&mut self) {
        self.tail.fill(0.0);
    }
}

/// Forward/inverse FFT plans bound to one window.
#[derive(Clone)]
pub struct Stft {
    window: WindowSpec,
    forward: Arc<dyn RealToComplex<f32>>,
    inverse: Arc<dyn ComplexToReal<f32>>,
}

impl fmt::Debug for Stft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stft").field("fft_size", &self.window.fft_size).finish()
    }
}

impl Default for Stft {
    fn default() -> Self {
        Self::new(WindowSpec::default())
    }
}

impl Stft {
    pub fn new(window: WindowSpec) -> Self {
        let mut planner = RealFftPlanner::<f32>::new();
        let forward = planner.plan_fft_forward(window.fft_size);
        let inverse = planner.plan_fft_inverse(window.fft_size);
        Self { window, forward, inverse }
    }

    pub fn window(&self) -> &WindowSpec {
        &self.window
    }

    /// Windowed FFT of exactly `fft_size` samples.
    pub fn analyze_frame(&self, recent: &[f32]) -> Result<SpectralFrame> {
        if recent.len() != self.window.fft_size {
            return Err(Error::InvalidArgument(format!(
                "analysis needs {} samples, got {}",
                self.window.fft_size,
                recent.len()
            )));
        }
        let mut input: Vec<f32> = recent.iter().zip(&self.window.window).map(|(x, w)| x * w).collect();
        let mut spectrum = self.forward.make_output_vec();
        self.forward.process(&mut input, &mut spectrum).expect("buffer sizes come from the plan");
        let mut frame = SpectralFrame::zeros(spectrum.len());
        for (k, c) in spectrum.iter().enumerate() {
            frame.magnitude[k] = c.norm();
            frame.phase[k] = wrap_phase(c.im.atan2(c.re));
        }
        Ok(frame)
    }

    /// Inverse FFT, synthesis window and overlap-add. Writes `hop` finished
    /// samples into `out` and carries the remainder in `state`.
    pub fn synthesize_frame(&self, frame: &SpectralFrame, state: &mut OlaState, out: &mut [f32]) -> Result<()> {
        let n = self.window.fft_size;
        let hop = self.window.hop;
        if frame.magnitude.len() != self.window.bins() || frame.phase.len() != self.window.bins() {
            return Err(shape_err("synthesis frame bins", self.window.bins(), frame.magnitude.len()));
        }
        if out.len() != hop {
            return Err(shape_err("synthesis output", hop, out.len()));
        }
        if state.tail.len() != n - hop {
            return Err(shape_err("overlap-add tail", n - hop, state.tail.len()));
        }
        let mut spectrum: Vec<Complex32> =
            frame.magnitude.iter().zip(&frame.phase).map(|(&m, &p)| Complex32::from_polar(m, p)).collect();
        // A real signal has purely real DC and Nyquist bins.
        spectrum[0].im = 0.0;
        let last = spectrum.len() - 1;
        spectrum[last].im = 0.0;

        let mut time = self.inverse.make_output_vec();
        self.inverse.process(&mut spectrum, &mut time).expect("buffer sizes come from the plan");
        let scale = 1.0 / n as f32;
        for (x, w) in time.iter_mut().zip(&self.window.window) {
            *x *= w * scale;
        }

        for (i, o) in out.iter_mut().enumerate() {
            *o = time[i] + state.tail[i];
        }
        // Shift the tail by one hop and accumulate the rest of this frame.
        let keep = n - 2 * hop;
        state.tail.copy_within(hop.., 0);
        for i in 0..(n - hop) {
            let carried = if i < keep { state.tail[i] } else { 0.0 };
            state.tail[i] = flush_denormal(carried + time[hop + i]);
        }
        Ok(())
    }

    /// Splits a whole signal into causal frames: `ceil(len / hop)` frames
    /// with `fft_size - hop` leading zeros and a zero-padded final hop.
    pub fn frame_stream(&self, audio: &AudioBuffer) -> Result<Vec<SpectralFrame>> {
        if audio.is_empty() {
            return Err(Error::InvalidArgument("cannot frame an empty signal".into()));
        }
        let n = self.window.fft_size;
        let hop = self.window.hop;
        let frames = audio.len().div_ceil(hop);
        let lead = n - hop;
        let mut padded = vec![0.0f32; lead + frames * hop];
        padded[lead..lead + audio.len()].copy_from_slice(&audio.samples);
        (0..frames).map(|t| self.analyze_frame(&padded[t * hop..t * hop + n])).collect()
    }

    /// Overlap-adds a frame sequence back to `len` samples, undoing the
    /// leading pad of [`Stft::frame_stream`]. Samples past `(T - 1) * hop`
    /// see only one window half; feed one more (zero-input) frame when the
    /// end of the signal must be exact.
    pub fn synthesize_stream(&self, frames: &[SpectralFrame], len: usize) -> Result<Vec<f32>> {
        let hop = self.window.hop;
        let lead = self.window.fft_size - hop;
        let mut state = OlaState::new(&self.window);
        let mut out = Vec::with_capacity((frames.len() + 1) * hop);
        let mut block = vec![0.0f32; hop];
        for frame in frames {
            self.synthesize_frame(frame, &mut state, &mut block)?;
            out.extend_from_slice(&block);
        }
        out.extend_from_slice(&state.tail[..hop.min(state.tail.len())]);
        let end = (lead + len).min(out.len());
        Ok(out[lead.min(end)..end].to_vec())
    }
}

/// Multiplies the magnitude by a gain mask in [0, 1]; the phase is copied
/// through untouched.
pub fn apply_mask(frame: &SpectralFrame, mask: &[f32]) -> Result<SpectralFrame> {
    if mask.len() != frame.magnitude.len() {
        return Err(Error::InvalidArgument(format!(
            "mask has {} bins, frame has {}",
            mask.len(),
            frame.magnitude.len()
        )));
    }
    if let Some((k, m)) = mask.iter().enumerate().find(|(_, m)| !(0.0..=1.0).contains(*m)) {
        return Err(Error::InvalidArgument(format!("mask[{k}] = {m} is outside [0, 1]")));
    }
    Ok(SpectralFrame {
        magnitude: frame.magnitude.iter().zip(mask).map(|(x, m)| x * m).collect(),
        phase: frame.phase.clone(),
    })
}

fn wrap_phase(p: f32) -> f32 {
    if p <= -std::f32::consts::PI {
        std::f32::consts::PI
    } else {
        p
    }
}

#[inline]
fn flush_denormal(x: f32) -> f32 {
    if x.abs() < f32::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(len: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
    }

    /// O(n^2) DFT in f64, independent of the FFT library.
    fn direct_dft(x: &[f64]) -> Vec<(f64, f64)> {
        let n = x.len();
        (0..=n / 2)
            .map(|k| {
                x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, v)| {
                    let a = -2.0 * PI * (k * t % n) as f64 / n as f64;
                    (re + v * a.cos(), im + v * a.sin())
                })
            })
            .collect()
    }

    #[test]
    fn window_is_cola() {
        let w = WindowSpec::default();
        assert!(w.cola_deviation() < 1e-12);
        assert_eq!(w.hop(), 1024);
        assert_eq!(w.bins(), 1025);
        // The f32 copy actually used for processing.
        for n in 0..w.hop() {
            let s = (w.values()[n] as f64).powi(2) + (w.values()[n + w.hop()] as f64).powi(2);
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn non_cola_window_rejected() {
        let ramp: Vec<f64> = (0..16).map(|n| n as f64 / 16.0).collect();
        assert!(WindowSpec::from_design(16, ramp).is_err());
        // A flat window is trivially COLA.
        assert!(WindowSpec::from_design(16, vec![0.8; 16]).is_ok());
        assert!(WindowSpec::sqrt_hann(7).is_err());
    }

    #[test]
    fn zero_frame_has_zero_magnitude_and_phase() {
        let stft = Stft::default();
        let frame = stft.analyze_frame(&vec![0.0; FFT_SIZE]).unwrap();
        assert_eq!(frame.bins(), FREQ_BINS);
        assert!(frame.magnitude.iter().all(|&m| m == 0.0));
        assert!(frame.phase.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn wrong_length_is_invalid_argument() {
        let stft = Stft::default();
        assert!(matches!(stft.analyze_frame(&[0.0; 100]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cosine_peaks_at_its_bin() {
        let stft = Stft::default();
        for k0 in [1usize, 37, 200, 1000] {
            let x: Vec<f32> =
                (0..FFT_SIZE).map(|n| (2.0 * PI * (k0 * n) as f64 / FFT_SIZE as f64).cos() as f32).collect();
            let frame = stft.analyze_frame(&x).unwrap();
            let argmax = frame.magnitude.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(argmax, k0);
        }
    }

    #[test]
    fn analysis_matches_direct_dft() {
        let stft = Stft::default();
        let x = random_signal(FFT_SIZE, 3);
        let frame = stft.analyze_frame(&x).unwrap();
        let windowed: Vec<f64> = x.iter().zip(stft.window().values()).map(|(a, w)| (a * w) as f64).collect();
        let reference = direct_dft(&windowed);
        let scale = reference.iter().map(|(r, i)| r.hypot(*i)).fold(0.0, f64::max);
        for (k, (re, im)) in reference.iter().enumerate() {
            let got_re = frame.magnitude[k] as f64 * (frame.phase[k] as f64).cos();
            let got_im = frame.magnitude[k] as f64 * (frame.phase[k] as f64).sin();
            assert!((got_re - re).abs() < 1e-5 * scale, "bin {k} re");
            assert!((got_im - im).abs() < 1e-5 * scale, "bin {k} im");
        }
        // Inverse of the same spectrum gives back the windowed frame.
        let mut state = OlaState::new(stft.window());
        let mut out = vec![0.0; HOP];
        stft.synthesize_frame(&frame, &mut state, &mut out).unwrap();
        // First hop: window^2 * x; tail: window^2 * x for the second half.
        let w = stft.window().values();
        for n in 0..HOP {
            assert!((out[n] - w[n] * w[n] * x[n]).abs() < 1e-5);
            assert!((state.tail()[n] - w[n + HOP] * w[n + HOP] * x[n + HOP]).abs() < 1e-5);
        }
    }

    #[test]
    fn phase_is_in_half_open_interval() {
        let stft = Stft::default();
        let frame = stft.analyze_frame(&random_signal(FFT_SIZE, 9)).unwrap();
        let pi = std::f32::consts::PI;
        assert!(frame.phase.iter().all(|&p| p > -pi && p <= pi));
    }

    #[test]
    fn mask_examples() {
        let frame = SpectralFrame { magnitude: vec![2.0, 4.0], phase: vec![0.3, -1.2] };
        let out = apply_mask(&frame, &[0.5, 0.25]).unwrap();
        assert_eq!(out.magnitude, vec![1.0, 1.0]);
        assert_eq!(out.phase, frame.phase);
        assert_eq!(apply_mask(&frame, &[1.0, 1.0]).unwrap(), frame);
        let zeroed = apply_mask(&frame, &[0.0, 0.0]).unwrap();
        assert_eq!(zeroed.magnitude, vec![0.0, 0.0]);
        assert_eq!(zeroed.phase, frame.phase);
    }

    #[test]
    fn mask_errors() {
        let frame = SpectralFrame { magnitude: vec![1.0, 1.0], phase: vec![0.0, 0.0] };
        assert!(matches!(apply_mask(&frame, &[1.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(apply_mask(&frame, &[1.0, 1.5]), Err(Error::InvalidArgument(_))));
        assert!(matches!(apply_mask(&frame, &[-0.1, 0.5]), Err(Error::InvalidArgument(_))));
        assert!(apply_mask(&frame, &[f32::NAN, 0.5]).is_err());
    }

    #[test]
    fn frame_counts() {
        let stft = Stft::default();
        let four_secs = AudioBuffer::new(vec![0.0; 192_000], 48_000).unwrap();
        let frames = stft.frame_stream(&four_secs).unwrap();
        assert_eq!(frames.len(), 188);
        assert!(frames.iter().all(|f| f.magnitude.iter().all(|&m| m == 0.0)));
        let one_hop = AudioBuffer::new(vec![0.1; HOP], 48_000).unwrap();
        assert_eq!(stft.frame_stream(&one_hop).unwrap().len(), 1);
        let empty = AudioBuffer { samples: vec![], sample_rate: 48_000 };
        assert!(matches!(stft.frame_stream(&empty), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn framing_is_causal() {
        // Changing sample s only affects frames whose window ends after s.
        let stft = Stft::default();
        let mut x = random_signal(8 * HOP, 5);
        let before = stft.frame_stream(&AudioBuffer::new(x.clone(), 48_000).unwrap()).unwrap();
        let s = 5 * HOP + 17;
        x[s] += 0.5;
        let after = stft.frame_stream(&AudioBuffer::new(x, 48_000).unwrap()).unwrap();
        for t in 0..before.len() {
            // Frame t spans samples [t*hop - (fft - hop), (t + 1) * hop).
            let covers = t * HOP <= s + (FFT_SIZE - HOP) && s < (t + 1) * HOP;
            assert_eq!(before[t] != after[t], covers, "frame {t}");
        }
    }

    #[test]
    fn round_trip_and_silence() {
        let stft = Stft::default();
        let x = random_signal(48_000, 11);
        let frames = stft.frame_stream(&AudioBuffer::new(x.clone(), 48_000).unwrap()).unwrap();
        let y = stft.synthesize_stream(&frames, x.len()).unwrap();
        assert_eq!(y.len(), x.len());
        // The final hop is only covered by one window half.
        let steady = (frames.len() - 1) * HOP;
        let rms =
            (x[..steady].iter().zip(&y).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>() / steady as f64).sqrt();
        assert!(rms < 1e-6, "rms {rms}");

        let silent = stft.synthesize_stream(&vec![SpectralFrame::zeros(FREQ_BINS); 5], 5 * HOP).unwrap();
        assert!(silent.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn impulse_energy_preserved() {
        let stft = Stft::default();
        let mut x = vec![0.0f32; 6 * HOP];
        x[3 * HOP + 100] = 1.0;
        let frames = stft.frame_stream(&AudioBuffer::new(x.clone(), 48_000).unwrap()).unwrap();
        let y = stft.synthesize_stream(&frames, x.len()).unwrap();
        let energy: f64 = y.iter().map(|v| (*v as f64).powi(2)).sum();
        assert!((energy - 1.0).abs() < 1e-6, "energy {energy}");
    }

    #[test]
    fn denormals_flushed_from_tail() {
        let stft = Stft::default();
        let mut frame = SpectralFrame::zeros(FREQ_BINS);
        frame.magnitude[0] = 1e-36;
        let mut state = OlaState::new(stft.window());
        let mut out = vec![0.0; HOP];
        stft.synthesize_frame(&frame, &mut state, &mut out).unwrap();
        assert!(state.tail().iter().all(|v| *v == 0.0 || v.abs() >= f32::MIN_POSITIVE));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mask_is_monotone_and_keeps_phase(
            mags in prop::collection::vec(0.0f32..10.0, 8),
            a in prop::collection::vec(0.0f32..=1.0, 8),
            b in prop::collection::vec(0.0f32..=1.0, 8),
        ) {
            let phase: Vec<f32> = (0..8).map(|i| i as f32 * 0.3 - 1.0).collect();
            let frame = SpectralFrame { magnitude: mags, phase: phase.clone() };
            let lo: Vec<f32> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
            let hi: Vec<f32> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
            let out_lo = apply_mask(&frame, &lo).unwrap();
            let out_hi = apply_mask(&frame, &hi).unwrap();
            for (l, h) in out_lo.magnitude.iter().zip(&out_hi.magnitude) {
                prop_assert!(l <= h);
            }
            prop_assert_eq!(out_lo.phase, phase);
        }
    }
}
