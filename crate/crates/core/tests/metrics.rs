use fbsd::metrics::{resample_48k_to_10k, sd_sdr, si_sdr, snr, stoi, Resampler};
use fbsd::{AudioBuffer, SAMPLE_RATE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::RealFftPlanner;

/// 64-bit LCG mapped to [-0.5, 0.5); easy to reproduce outside Rust.
fn lcg(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed;
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// Amplitude-modulated three-tone "clean" signal and LCG noise, 48 kHz.
fn golden_pair(n: usize) -> (Vec<f32>, Vec<f32>) {
    use std::f64::consts::PI;
    let clean = (0..n)
        .map(|i| {
            let t = i as f64 / 48_000.0;
            let env = 0.5 + 0.5 * (2.0 * PI * 3.0 * t).sin();
            let v = 0.4 * (2.0 * PI * 440.0 * t).sin()
                + 0.2 * (2.0 * PI * 1250.0 * t).sin()
                + 0.1 * (2.0 * PI * 2900.0 * t).sin();
            (env * v) as f32
        })
        .collect();
    let noise = lcg(n, 7).into_iter().map(|v| v as f32).collect();
    (clean, noise)
}

fn buf(s: Vec<f32>) -> AudioBuffer {
    AudioBuffer::new(s, SAMPLE_RATE).unwrap()
}

fn gaussianish(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| (0..4).map(|_| rng.gen_range(-1.0f32..1.0)).sum::<f32>() * 0.5).collect()
}

#[test]
fn si_sdr_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n = rng.gen_range(16..2000);
        let s = gaussianish(&mut rng, n);
        let e: Vec<f32> = s.iter().map(|&v| rng.gen_range(0.2f32..2.0) * v + rng.gen_range(-0.5f32..0.5)).collect();
        let (s64, e64): (Vec<f64>, Vec<f64>) =
            (s.iter().map(|&v| v as f64).collect(), e.iter().map(|&v| v as f64).collect());
        let dot: f64 = s64.iter().zip(&e64).map(|(a, b)| a * b).sum();
        let ss: f64 = s64.iter().map(|a| a * a).sum();
        let target: Vec<f64> = s64.iter().map(|a| dot / ss * a).collect();
        let num: f64 = target.iter().map(|a| a * a).sum();
        let den: f64 = e64.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum();
        let want = 10.0 * (num / den).log10();
        assert!((si_sdr(&s, &e).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn orthogonal_equal_energy_error_is_zero_db() {
    let n = 4800;
    let s: Vec<f32> = (0..n).map(|i| (2.0 * std::f32::consts::PI * 10.0 * i as f32 / n as f32).sin()).collect();
    let c: Vec<f32> = (0..n).map(|i| (2.0 * std::f32::consts::PI * 10.0 * i as f32 / n as f32).cos()).collect();
    let e: Vec<f32> = s.iter().zip(&c).map(|(a, b)| a + b).collect();
    assert!(si_sdr(&s, &e).unwrap().abs() < 1e-6);
}

#[test]
fn sd_sdr_bounded_by_si_sdr_and_snr() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.gen_range(16..2000);
        let s = gaussianish(&mut rng, n);
        let gain = rng.gen_range(0.1f32..1.0);
        let e: Vec<f32> = s.iter().map(|&v| gain * v + rng.gen_range(-0.3f32..0.3)).collect();
        let sd = sd_sdr(&s, &e).unwrap();
        assert!(sd <= si_sdr(&s, &e).unwrap() + 1e-9);
        // Holds whenever the projection gain does not exceed one.
        assert!(sd <= snr(&s, &e).unwrap() + 1e-9);
    }
}

#[test]
fn resampler_passes_dc() {
    let r = Resampler::new(10_000, 48_000).unwrap();
    let y = r.process(&vec![0.7f32; 48_000]);
    // Away from the edges, where the filter sees a full window.
    for &v in &y[500..9_500] {
        assert!((v - 0.7).abs() < 1e-4 * 0.7, "{v}");
    }
}

fn tone_level_db(freq: f64) -> f64 {
    let x: Vec<f32> =
        (0..96_000).map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / 48_000.0).sin() as f32).collect();
    let y = resample_48k_to_10k(&buf(x)).unwrap();
    assert_eq!(y.sample_rate, 10_000);
    assert_eq!(y.len(), 20_000);
    let mid = &y.samples[2_000..18_000];
    let rms = (mid.iter().map(|&v| v as f64 * v as f64).sum::<f64>() / mid.len() as f64).sqrt();
    20.0 * (rms * 2f64.sqrt()).log10()
}

#[test]
fn resampler_passband_and_stopband() {
    assert!(tone_level_db(1_000.0).abs() < 20.0 * 1.01f64.log10(), "1 kHz level {}", tone_level_db(1_000.0));
    assert!(tone_level_db(6_000.0) <= -40.0, "6 kHz level {}", tone_level_db(6_000.0));
}

#[test]
fn resampler_spectrum_has_no_image_of_in_band_tone() {
    let x: Vec<f32> =
        (0..96_000).map(|i| (2.0 * std::f64::consts::PI * 2_000.0 * i as f64 / 48_000.0).sin() as f32).collect();
    let y = resample_48k_to_10k(&buf(x)).unwrap();
    let seg: Vec<f64> = y.samples[2_000..12_000].iter().map(|&v| v as f64).collect();
    let mut fft = RealFftPlanner::<f64>::new();
    let plan = fft.plan_fft_forward(seg.len());
    let mut input = seg.clone();
    let mut out = plan.make_output_vec();
    plan.process(&mut input, &mut out).unwrap();
    // 1 Hz per bin; the tone sits at bin 2000.
    let peak = out.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
    assert_eq!(peak, 2_000);
}

#[test]
fn resampler_matches_octave_style_reference() {
    // Reference samples from the Octave-compatible resampler used by the
    // common Python STOI implementation, same clean signal.
    let (clean, _) = golden_pair(96_000);
    let y = resample_48k_to_10k(&buf(clean)).unwrap();
    assert_eq!(y.len(), 20_000);
    for (i, want) in
        [(100, 0.139_604_414_611_462_83), (5_000, -3.184_988_199_319_048_6e-7), (19_999, -0.170_056_549_637_783)]
    {
        assert!((y.samples[i] as f64 - want).abs() < 1e-6, "sample {i}: {} vs {want}", y.samples[i]);
    }
}

#[test]
fn stoi_matches_reference_implementation() {
    // Values from pystoi 0.4 (classic STOI, 48 kHz input) on the same signals.
    let (clean, noise) = golden_pair(96_000);
    let cases = [
        (0.01f32, 0.717_614_658_869_977_6),
        (0.05, 0.532_437_017_890_301),
        (0.2, 0.419_021_435_637_899_3),
        (0.5, 0.384_055_585_859_980_7),
    ];
    for (g, want) in cases {
        let noisy: Vec<f32> = clean.iter().zip(&noise).map(|(&c, &z)| c + g * z).collect();
        let got = stoi(&buf(clean.clone()), &buf(noisy)).unwrap();
        assert!((got - want).abs() < 1e-4, "gain {g}: {got} vs {want}");
    }
}

#[test]
fn stoi_identity_noise_and_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (clean, _) = golden_pair(96_000);
    let c = buf(clean.clone());
    assert!((stoi(&c, &c).unwrap() - 1.0).abs() < 1e-6);
    let noise = buf(gaussianish(&mut rng, 96_000));
    assert!(stoi(&c, &noise).unwrap() < 0.5);
    let loud = buf(clean.iter().map(|v| v * 3.0).collect());
    assert!((stoi(&c, &loud).unwrap() - 1.0).abs() < 1e-6);
}
