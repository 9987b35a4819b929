//! Seeded fixtures shared by the engine benchmarks.

use fbsd::{random_init, AudioBuffer, Model, ModelConfig, SpectralFrame, Stft, WindowSpec, SAMPLE_RATE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn default_model(seed: u64) -> Model {
    let c = ModelConfig::default();
    Model::from_weights(&c, &random_init(&c, seed).expect("default config is valid")).expect("layout matches")
}

/// Uniform noise in [-amp, amp) at 48 kHz.
pub fn noise(secs: f64, amp: f32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (secs * SAMPLE_RATE as f64) as usize;
    AudioBuffer::new((0..n).map(|_| rng.gen_range(-amp..amp)).collect(), SAMPLE_RATE).expect("finite samples")
}

/// A harmonic tone under a slow envelope, mixed with noise at roughly 5 dB.
pub fn noisy_pair(secs: f64, seed: u64) -> (AudioBuffer, AudioBuffer) {
    let n = (secs * SAMPLE_RATE as f64) as usize;
    let clean: Vec<f32> = (0..n)
        .map(|i| {
            let t = i as f32 / SAMPLE_RATE as f32;
            let env = 0.5 + 0.5 * (2.0 * std::f32::consts::PI * 3.0 * t).sin();
            env * (1..=6).map(|h| (2.0 * std::f32::consts::PI * 150.0 * h as f32 * t).sin() / h as f32).sum::<f32>()
                * 0.2
        })
        .collect();
    let z = noise(secs, 0.1, seed);
    let noisy = clean.iter().zip(&z.samples).map(|(a, b)| a + b).collect();
    (
        AudioBuffer::new(clean, SAMPLE_RATE).expect("finite samples"),
        AudioBuffer::new(noisy, SAMPLE_RATE).expect("finite samples"),
    )
}

/// STFT frames of seeded noise with the default framing.
pub fn frames(count: usize, seed: u64) -> Vec<SpectralFrame> {
    let stft = Stft::new(WindowSpec::default());
    let secs = (count * WindowSpec::default().hop()) as f64 / SAMPLE_RATE as f64;
    stft.frame_stream(&noise(secs, 0.5, seed)).expect("non-empty signal")
}
