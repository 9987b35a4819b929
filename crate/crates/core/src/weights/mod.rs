//! Weight storage, seeded initialization, the binary weight file and the
//! analytical cost model.

mod cost;
mod io;
mod layout;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use cost::{count_macs, count_params, CostReport, MacBreakdown, ParamCounts};
pub use io::{load, load_from_bytes, save, save_to_bytes, FORMAT_VERSION, MAGIC};
pub use layout::{is_mapping, layout, Init, ParamSpec};

use crate::error::{Result, WeightsError};
use crate::model::ModelConfig;

/// A dense f32 tensor in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        crate::nn::check_len("tensor data", n, data.len())?;
        Ok(Self { shape, data })
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

/// Named tensors keyed by their canonical layout name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelWeights {
    tensors: BTreeMap<String, Tensor>,
}

impl ModelWeights {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a tensor, returning the previous one.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Option<Tensor> {
        self.tensors.insert(name.into(), tensor)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Tensor> {
        self.tensors.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars across all tensors.
    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(Tensor::numel).sum()
    }

    /// Checks that the set of tensors is exactly the config's layout with
    /// matching shapes and finite values.
    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        config.validate()?;
        let specs = layout(config);
        let unknown: Vec<String> =
            self.tensors.keys().filter(|k| !specs.iter().any(|s| &s.name == *k)).cloned().collect();
        if !unknown.is_empty() {
            return Err(WeightsError::UnknownTensors(unknown).into());
        }
        let missing: Vec<String> =
            specs.iter().filter(|s| !self.tensors.contains_key(&s.name)).map(|s| s.name.clone()).collect();
        if !missing.is_empty() {
            return Err(WeightsError::MissingTensors(missing).into());
        }
        for spec in &specs {
            let t = &self.tensors[&spec.name];
            if t.shape != spec.shape {
                return Err(WeightsError::TensorShape {
                    name: spec.name.clone(),
                    expected: spec.shape.clone(),
                    found: t.shape.clone(),
                }
                .into());
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(WeightsError::NonFinite { name: spec.name.clone() }.into());
            }
        }
        Ok(())
    }

    /// Fetches a tensor's data after checking its shape.
    pub(crate) fn expect(&self, name: &str, shape: &[usize]) -> Result<&[f32]> {
        let t = self.tensors.get(name).ok_or_else(|| WeightsError::MissingTensors(vec![name.to_string()]))?;
        if t.shape != shape {
            return Err(WeightsError::TensorShape {
                name: name.to_string(),
                expected: shape.to_vec(),
                found: t.shape.clone(),
            }
            .into());
        }
        Ok(&t.data)
    }
}

/// Deterministic initialization: conv and affine weights and biases are
/// uniform in `±1/sqrt(fan_in)`, GRU tensors uniform in `±1/sqrt(hidden)`,
/// norms start at identity.
pub fn random_init(config: &ModelConfig, seed: u64) -> Result<ModelWeights> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = ModelWeights::new();
    for spec in layout(config) {
        let n = spec.numel();
        let data = match spec.init {
            Init::Uniform(bound) => (0..n).map(|_| rng.gen_range(-bound..=bound)).collect(),
            Init::Ones => vec![1.0; n],
            Init::Zeros => vec![0.0; n],
        };
        weights.insert(spec.name, Tensor { shape: spec.shape, data });
    }
    Ok(weights)
}
