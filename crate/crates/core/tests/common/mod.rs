#![allow(dead_code)]

pub mod reference;

use fbsd::{ModelConfig, ModelWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random init with every tensor (norm affines included) perturbed, so no
/// layer is an identity.
pub fn scrambled_weights(config: &ModelConfig, seed: u64) -> ModelWeights {
    let mut w = fbsd::random_init(config, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000));
    let names: Vec<String> = w.iter().map(|(n, _)| n.to_string()).collect();
    for name in names {
        let t = w.get_mut(&name).unwrap();
        let is_gamma = name.ends_with(".gamma");
        for v in t.data.iter_mut() {
            *v = if is_gamma { rng.gen_range(0.5f32..1.5) } else { *v + rng.gen_range(-0.1f32..0.1) };
        }
    }
    w
}

pub fn random_magnitudes(bins: usize, frames: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames).map(|_| (0..bins).map(|_| rng.gen_range(0.0f32..3.0)).collect()).collect()
}

pub fn lcg_noise(n: usize, seed: u64, amp: f32) -> Vec<f32> {
    let mut s = seed;
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            amp * ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) as f32 * 2.0
        })
        .collect()
}

/// Speech-like test signal: a few harmonics of a gliding pitch under a
/// syllable-rate envelope.
pub fn voiced(n: usize, sample_rate: f32) -> Vec<f32> {
    use std::f32::consts::PI;
    let mut phase = 0.0f32;
    (0..n)
        .map(|i| {
            let t = i as f32 / sample_rate;
            let f0 = 140.0 + 30.0 * (2.0 * PI * 0.7 * t).sin();
            phase += 2.0 * PI * f0 / sample_rate;
            let env = (0.5 + 0.5 * (2.0 * PI * 4.0 * t).sin()).powi(2);
            let v: f32 = (1..=12).map(|h| (h as f32 * phase).sin() / h as f32).sum();
            0.2 * env * v
        })
        .collect()
}
