use fbsd_bench::{default_model, frames, noise, noisy_pair};

#[test]
fn fixtures_are_seeded_and_sized() {
    assert_eq!(noise(0.5, 0.2, 1), noise(0.5, 0.2, 1));
    assert_ne!(noise(0.5, 0.2, 1), noise(0.5, 0.2, 2));
    assert_eq!(noise(0.5, 0.2, 1).len(), 24_000);
    assert!(noise(0.5, 0.2, 1).peak() < 0.2);

    let (clean, noisy) = noisy_pair(1.0, 3);
    assert_eq!(clean.len(), noisy.len());
    let snr = fbsd::metrics::snr(&clean.samples, &noisy.samples).unwrap();
    assert!((2.0..8.0).contains(&snr), "{snr}");

    let fs = frames(10, 4);
    assert_eq!(fs.len(), 10);
    assert!(fs.iter().all(|f| f.bins() == 1025));
    assert_eq!(default_model(0).config().freq_bins, 1025);
}
