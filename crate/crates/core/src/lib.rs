//! Causal full-band speech denoising: STFT front end, a frame-by-frame mask
//! estimator, its weight format and cost model, and objective metrics.

pub mod audio;
pub mod denoise;
pub mod dsp;
pub mod error;
pub mod metrics;
pub mod mix;
pub mod model;
pub mod nn;
pub mod rtf;
pub mod trace;
pub mod weights;

pub use audio::{
    read_wav, read_wav_48k, write_wav, AudioBuffer, WavBlockReader, WavBlockWriter, WavEncoding, SAMPLE_RATE,
};
pub use denoise::Denoiser;
pub use dsp::{apply_mask, OlaState, SpectralFrame, Stft, WindowSpec, FFT_SIZE, FREQ_BINS, HOP};
pub use error::{Error, Result, WeightsError};
pub use metrics::{evaluate, resample_48k_to_10k, sd_sdr, si_sdr, stoi, EvalReport, UtteranceScores};
pub use mix::{mix, segment, MixSpec, Mixture};
pub use model::{ActivationTrace, Model, ModelConfig, StepOutput, StreamState};
pub use rtf::{measure_rtf, RtfConfig, RtfReport};
pub use weights::{count_macs, count_params, random_init, CostReport, ModelWeights, Tensor};
