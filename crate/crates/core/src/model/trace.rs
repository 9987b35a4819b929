/// One captured intermediate tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// Intermediate activations of a single step, in pipeline order.
///
/// Names: `map_in`, `in_pad`, `skip{i}` (one per encoder block), `encoder`,
/// `bottleneck`, `decoder`, `ae`, `mask_head`, `mask`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivationTrace {
    tensors: Vec<TracedTensor>,
}

impl ActivationTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a tensor, or replaces the one already recorded under `name`.
    pub fn record(&mut self, name: impl Into<String>, shape: Vec<usize>, data: &[f32]) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        let t = TracedTensor { name: name.into(), shape, data: data.to_vec() };
        match self.tensors.iter_mut().find(|x| x.name == t.name) {
            Some(slot) => *slot = t,
            None => self.tensors.push(t),
        }
    }

    pub fn get(&self, name: &str) -> Option<&TracedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn tensors(&self) -> &[TracedTensor] {
        &self.tensors
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.iter().map(|t| t.name.as_str())
    }
}
