//! Activation trace files shared with external reference implementations.
//!
//! A trace directory holds `manifest.json` plus one raw little-endian f32
//! file per (frame, tensor). Every frame carries an `input` tensor (the
//! magnitude frame fed to the model) and any subset of the names produced
//! by [`Model::step_traced`].

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::WindowSpec;
use crate::error::{Error, Result};
use crate::model::{ActivationTrace, Model};

pub const MANIFEST: &str = "manifest.json";
const FORMAT: &str = "fbsd-trace";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    frames: usize,
    tensors: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    frame: usize,
    name: String,
    shape: Vec<usize>,
    file: String,
}

/// Runs `frames` through a fresh stream and records every step.
pub fn capture(model: &Model, frames: &[Vec<f32>]) -> Result<Vec<ActivationTrace>> {
    let mut state = model.new_state(&WindowSpec::sqrt_hann((model.config().freq_bins - 1) * 2)?);
    frames
        .iter()
        .map(|f| {
            let (_, trace) = model.step_traced(f, &mut state)?;
            let mut full = ActivationTrace::new();
            full.record("input", vec![f.len()], f);
            for t in trace.tensors() {
                full.record(t.name.clone(), t.shape.clone(), &t.data);
            }
            Ok(full)
        })
        .collect()
}

pub fn write_traces(dir: impl AsRef<Path>, traces: &[ActivationTrace]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (frame, trace) in traces.iter().enumerate() {
        for t in trace.tensors() {
            if t.name.contains(['/', '\\']) || t.name.is_empty() {
                return Err(Error::InvalidArgument(format!("tensor name {:?} cannot be a file name", t.name)));
            }
            let file = format!("{frame:05}_{}.f32", t.name);
            let bytes: Vec<u8> = t.data.iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(dir.join(&file), bytes)?;
            entries.push(ManifestEntry { frame, name: t.name.clone(), shape: t.shape.clone(), file });
        }
    }
    let manifest = Manifest { format: FORMAT.into(), version: VERSION, frames: traces.len(), tensors: entries };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    fs::write(dir.join(MANIFEST), json)?;
    Ok(())
}

pub fn read_traces(dir: impl AsRef<Path>) -> Result<Vec<ActivationTrace>> {
    let dir = dir.as_ref();
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST))?)
        .map_err(|e| Error::InvalidArgument(format!("trace manifest: {e}")))?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(Error::InvalidArgument(format!(
            "trace manifest is {} v{}, expected {FORMAT} v{VERSION}",
            manifest.format, manifest.version
        )));
    }
    let mut traces = vec![ActivationTrace::new(); manifest.frames];
    for e in manifest.tensors {
        if e.frame >= manifest.frames || e.file.contains(['/', '\\']) {
            return Err(Error::InvalidArgument(format!("bad trace entry {} for frame {}", e.file, e.frame)));
        }
        let bytes = fs::read(dir.join(&e.file))?;
        let n: usize = e.shape.iter().product();
        if bytes.len() != 4 * n {
            return Err(Error::InvalidArgument(format!(
                "{} holds {} bytes, shape {:?} needs {}",
                e.file,
                bytes.len(),
                e.shape,
                4 * n
            )));
        }
        let data: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        traces[e.frame].record(e.name, e.shape, &data);
    }
    Ok(traces)
}

/// Largest absolute difference for one tensor in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorDiff {
    pub frame: usize,
    pub name: String,
    pub max_abs: f32,
}

/// Feeds each frame's `input` to a fresh stream and compares every other
/// recorded tensor against the engine's own activations.
pub fn replay(model: &Model, reference: &[ActivationTrace]) -> Result<Vec<TensorDiff>> {
    let inputs: Vec<Vec<f32>> = reference
        .iter()
        .enumerate()
        .map(|(i, t)| {
            t.get("input")
                .map(|x| x.data.clone())
                .ok_or_else(|| Error::InvalidArgument(format!("trace frame {i} has no input tensor")))
        })
        .collect::<Result<_>>()?;
    let ours = capture(model, &inputs)?;
    let mut diffs = Vec::new();
    for (frame, (r, o)) in reference.iter().zip(&ours).enumerate() {
        for t in r.tensors().iter().filter(|t| t.name != "input") {
            let mine = o
                .get(&t.name)
                .ok_or_else(|| Error::InvalidArgument(format!("engine does not produce tensor {}", t.name)))?;
            if mine.shape != t.shape {
                return Err(crate::error::shape_err(
                    "traced tensor",
                    format!("{}{:?}", t.name, mine.shape),
                    format!("{:?}", t.shape),
                ));
            }
            // NaN anywhere must not read as agreement.
            let max_abs = mine.data.iter().zip(&t.data).map(|(a, b)| (a - b).abs()).fold(0.0f32, |m, d| {
                if d.is_nan() {
                    f32::INFINITY
                } else {
                    m.max(d)
                }
            });
            diffs.push(TensorDiff { frame, name: t.name.clone(), max_abs });
        }
    }
    Ok(diffs)
}
