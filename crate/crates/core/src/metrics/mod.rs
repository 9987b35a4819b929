//! Objective quality metrics and report aggregation.

mod resample;
mod sdr;
mod stoi;

pub use resample::{resample_48k_to_10k, Resampler};
pub use sdr::{sd_sdr, si_sdr, snr, EXACT_MATCH_RATIO};
pub use stoi::{stoi, stoi_10k, STOI_RATE};

use serde::{Serialize, Serializer};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Infinite dB values are capped at this magnitude when averaged.
pub const DB_CAP: f64 = 120.0;

fn db_or_sentinel<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Scores for one (clean, processed) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtteranceScores {
    pub name: String,
    #[serde(serialize_with = "db_or_sentinel")]
    pub si_sdr: f64,
    #[serde(serialize_with = "db_or_sentinel")]
    pub sd_sdr: f64,
    /// Clamped to [0, 1].
    pub stoi: f64,
}

/// Scores every metric on full utterances.
pub fn evaluate(name: impl Into<String>, clean: &AudioBuffer, processed: &AudioBuffer) -> Result<UtteranceScores> {
    if clean.sample_rate != processed.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "sample rates differ: {} vs {}",
            clean.sample_rate, processed.sample_rate
        )));
    }
    Ok(UtteranceScores {
        name: name.into(),
        si_sdr: si_sdr(&clean.samples, &processed.samples)?,
        sd_sdr: sd_sdr(&clean.samples, &processed.samples)?,
        stoi: stoi(clean, processed)?.clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub count: usize,
    pub si_sdr: f64,
    pub sd_sdr: f64,
    pub stoi: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub utterances: Vec<UtteranceScores>,
}

impl EvalReport {
    pub fn push(&mut self, scores: UtteranceScores) {
        self.utterances.push(scores);
    }

    /// Means over utterances, with infinite dB values capped at ±[`DB_CAP`].
    pub fn aggregate(&self) -> Option<Aggregate> {
        let n = self.utterances.len();
        if n == 0 {
            return None;
        }
        let cap = |v: f64| v.clamp(-DB_CAP, DB_CAP);
        let mean = |f: &dyn Fn(&UtteranceScores) -> f64| self.utterances.iter().map(f).sum::<f64>() / n as f64;
        Some(Aggregate {
            count: n,
            si_sdr: mean(&|u| cap(u.si_sdr)),
            sd_sdr: mean(&|u| cap(u.sd_sdr)),
            stoi: mean(&|u| u.stoi),
        })
    }

    /// One JSON object per utterance.
    pub fn json_lines(&self) -> String {
        self.utterances.iter().map(|u| serde_json::to_string(u).expect("plain data serializes") + "\n").collect()
    }

    pub fn summary_table(&self) -> String {
        let mut s = format!("{:<24} {:>10} {:>10} {:>8}\n", "utterance", "SI-SDR", "SD-SDR", "STOI");
        let db = |v: f64| {
            if v.is_finite() {
                format!("{v:.2}")
            } else if v > 0.0 {
                "inf".into()
            } else {
                "-inf".into()
            }
        };
        for u in &self.utterances {
            s += &format!("{:<24} {:>10} {:>10} {:>8.4}\n", u.name, db(u.si_sdr), db(u.sd_sdr), u.stoi);
        }
        if let Some(a) = self.aggregate() {
            s += &format!(
                "{:<24} {:>10.2} {:>10.2} {:>8.4}\n",
                format!("mean (n={})", a.count),
                a.si_sdr,
                a.sd_sdr,
                a.stoi
            );
        }
        s
    }
}
