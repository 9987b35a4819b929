use crate::error::{Error, Result};

/// Residual energy at or below this fraction of the target energy is treated
/// as an exact match (the f32 rounding floor sits far above f64 noise).
pub const EXACT_MATCH_RATIO: f64 = 1e-12;

struct Projection {
    /// `<est, ref> / ||ref||^2`
    beta: f64,
    ref_energy: f64,
}

fn project(reference: &[f32], estimate: &[f32]) -> Result<Projection> {
    if reference.len() != estimate.len() {
        return Err(Error::InvalidArgument(format!(
            "reference has {} samples, estimate {}",
            reference.len(),
            estimate.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("empty signals".into()));
    }
    let mut dot = 0.0f64;
    let mut ref_energy = 0.0f64;
    for (&s, &e) in reference.iter().zip(estimate) {
        dot += s as f64 * e as f64;
        ref_energy += s as f64 * s as f64;
    }
    if ref_energy == 0.0 {
        return Err(Error::SilentReference);
    }
    Ok(Projection { beta: dot / ref_energy, ref_energy })
}

fn ratio_db(target: f64, residual: f64) -> f64 {
    if target == 0.0 {
        f64::NEG_INFINITY
    } else if residual <= EXACT_MATCH_RATIO * target {
        f64::INFINITY
    } else {
        10.0 * (target / residual).log10()
    }
}

/// Scale-invariant SDR in dB: the estimate is compared against its own
/// projection onto the reference.
pub fn si_sdr(reference: &[f32], estimate: &[f32]) -> Result<f64> {
    let p = project(reference, estimate)?;
    let residual: f64 = reference.iter().zip(estimate).map(|(&s, &e)| (e as f64 - p.beta * s as f64).powi(2)).sum();
    Ok(ratio_db(p.beta * p.beta * p.ref_energy, residual))
}

/// Scale-dependent SDR in dB: same target as [`si_sdr`], but the error is
/// measured against the reference itself, so any gain mismatch counts as
/// distortion. Never exceeds [`si_sdr`].
pub fn sd_sdr(reference: &[f32], estimate: &[f32]) -> Result<f64> {
    let p = project(reference, estimate)?;
    let residual: f64 = reference.iter().zip(estimate).map(|(&s, &e)| (s as f64 - e as f64).powi(2)).sum();
    Ok(ratio_db(p.beta * p.beta * p.ref_energy, residual))
}

/// Plain SNR of an estimate against the reference, in dB.
pub fn snr(reference: &[f32], estimate: &[f32]) -> Result<f64> {
    let p = project(reference, estimate)?;
    let residual: f64 = reference.iter().zip(estimate).map(|(&s, &e)| (s as f64 - e as f64).powi(2)).sum();
    Ok(ratio_db(p.ref_energy, residual))
}
