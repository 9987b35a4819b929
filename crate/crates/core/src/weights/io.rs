//! Binary weight file.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic        4 bytes  "FBSD"
//! version      u32      1
//! config_len   u32
//! config       config_len bytes of UTF-8 JSON (ModelConfig)
//! count        u32      number of tensors
//! count entries:
//!   name_len   u16
//!   name       name_len bytes UTF-8
//!   ndim       u8
//!   dims       ndim x u32
//!   offset     u64      byte offset of the tensor inside the payload
//! payload      f32 values, tensors back to back in directory order
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::{layout, ModelWeights, Tensor};
use crate::error::{Result, WeightsError};
use crate::model::ModelConfig;

pub const MAGIC: [u8; 4] = *b"FBSD";
pub const FORMAT_VERSION: u32 = 1;

/// Serializes a complete, config-consistent weight set.
pub fn save_to_bytes(weights: &ModelWeights, config: &ModelConfig) -> Result<Vec<u8>> {
    weights.validate(config)?;
    let specs = layout(config);
    let config_json = serde_json::to_vec(config).map_err(|e| WeightsError::CorruptHeader(e.to_string()))?;

    let mut out = Vec::with_capacity(4 * weights.num_scalars() + 64 * specs.len() + config_json.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&config_json);
    out.extend_from_slice(&(specs.len() as u32).to_le_bytes());
    let mut offset = 0u64;
    for spec in &specs {
        out.extend_from_slice(&(spec.name.len() as u16).to_le_bytes());
        out.extend_from_slice(spec.name.as_bytes());
        out.push(spec.shape.len() as u8);
        for &d in &spec.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&offset.to_le_bytes());
        offset += 4 * spec.numel() as u64;
    }
    for spec in &specs {
        for v in &weights.get(&spec.name).expect("validated").data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save(weights: &ModelWeights, config: &ModelConfig, path: impl AsRef<Path>) -> Result<()> {
    let bytes = save_to_bytes(weights, config)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(ModelWeights, ModelConfig)> {
    load_from_bytes(&fs::read(path)?)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WeightsError> {
        if self.buf.len() - self.pos < n {
            return Err(WeightsError::CorruptHeader(format!("file ends inside {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8, WeightsError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, WeightsError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, WeightsError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, WeightsError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

/// Parses and validates a weight file image.
pub fn load_from_bytes(bytes: &[u8]) -> Result<(ModelWeights, ModelConfig)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if bytes.len() < 4 {
        return Err(WeightsError::CorruptHeader(format!("{} bytes is too short for a header", bytes.len())).into());
    }
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if magic != MAGIC {
        return Err(WeightsError::BadMagic(magic).into());
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(WeightsError::UnsupportedVersion { found: version, supported: FORMAT_VERSION }.into());
    }
    let config_len = r.u32("config length")? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(config_len, "config")?)
        .map_err(|e| WeightsError::CorruptHeader(format!("config JSON: {e}")))?;
    config.validate()?;

    let count = r.u32("tensor count")? as usize;
    let mut entries = Vec::with_capacity(count.min(4096));
    let mut seen = HashSet::new();
    for _ in 0..count {
        let name_len = r.u16("tensor name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "tensor name")?)
            .map_err(|_| WeightsError::CorruptHeader("tensor name is not UTF-8".into()))?
            .to_string();
        let ndim = r.u8("tensor rank")? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32("tensor dims")? as usize);
        }
        let offset = r.u64("tensor offset")?;
        if !seen.insert(name.clone()) {
            return Err(WeightsError::DuplicateTensor { name }.into());
        }
        entries.push(Entry { name, shape, offset });
    }

    let mut expected_offset = 0u64;
    for e in &entries {
        if e.offset != expected_offset {
            return Err(WeightsError::CorruptHeader(format!(
                "tensor {} at payload offset {}, expected {}",
                e.name, e.offset, expected_offset
            ))
            .into());
        }
        let numel = e
            .shape
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
            .ok_or_else(|| WeightsError::CorruptHeader(format!("tensor {} dims overflow", e.name)))?;
        expected_offset = numel
            .checked_mul(4)
            .and_then(|b| b.checked_add(expected_offset))
            .ok_or_else(|| WeightsError::CorruptHeader(format!("tensor {} size overflow", e.name)))?;
    }
    let payload = &bytes[r.pos..];
    let found = payload.len() as u64;
    if found < expected_offset {
        return Err(WeightsError::TruncatedPayload { expected: expected_offset, found }.into());
    }
    if found > expected_offset {
        return Err(
            WeightsError::CorruptHeader(format!("{} trailing bytes after payload", found - expected_offset)).into()
        );
    }

    let mut weights = ModelWeights::new();
    for e in entries {
        let start = e.offset as usize;
        let numel: usize = e.shape.iter().product();
        let data = payload[start..start + 4 * numel]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        weights.insert(e.name, Tensor { shape: e.shape, data });
    }
    weights.validate(&config)?;
    Ok((weights, config))
}
