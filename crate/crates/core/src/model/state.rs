use super::ModelConfig;
use crate::dsp::{OlaState, WindowSpec};
use crate::error::{Error, Result};
use crate::nn::GruState;

/// Fixed-capacity ring of equal-width rows, zero-filled at creation so that
/// reads before the stream has produced `capacity` rows see zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    width: usize,
    capacity: usize,
    data: Vec<f32>,
    /// Slot the next push writes to.
    head: usize,
}

impl History {
    pub fn new(capacity: usize, width: usize) -> Self {
        Self { width, capacity, data: vec![0.0; capacity * width], head: 0 }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, row: &[f32]) {
        debug_assert_eq!(row.len(), self.width);
        if self.capacity == 0 {
            return;
        }
        let start = self.head * self.width;
        self.data[start..start + self.width].copy_from_slice(row);
        self.head = (self.head + 1) % self.capacity;
    }

    /// Appends the `n` most recent rows to `out`, oldest first.
    pub fn extend_recent(&self, n: usize, out: &mut Vec<f32>) {
        assert!(n <= self.capacity, "history holds {} rows, asked for {n}", self.capacity);
        for i in 0..n {
            let slot = (self.head + self.capacity - n + i) % self.capacity;
            out.extend_from_slice(&self.data[slot * self.width..(slot + 1) * self.width]);
        }
    }

    pub fn reset(&mut self) {
        self.data.fill(0.0);
        self.head = 0;
    }
}

/// Everything a stream carries between frames. One per stream; the model
/// itself is immutable and can be shared.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamState {
    /// Map_in outputs; serves both the encoder window and the mask head.
    pub(crate) map_in: History,
    /// Previous AE outputs (the current one is added at use).
    pub(crate) ae: History,
    pub(crate) bottleneck_gru: GruState,
    pub(crate) ae_gru: GruState,
    pub(crate) ola: OlaState,
    pub(crate) frames: u64,
}

impl StreamState {
    pub fn new(config: &ModelConfig, window: &WindowSpec) -> Self {
        let depth = config.input_window().max(config.mask_window());
        Self {
            map_in: History::new(depth, config.map_dim),
            ae: History::new(config.mask_lookback, config.map_dim),
            bottleneck_gru: GruState::zeros(config.bottleneck_hidden),
            ae_gru: GruState::zeros(config.ae_hidden),
            ola: OlaState::new(window),
            frames: 0,
        }
    }

    /// Zeroes every ring, recurrent state and the overlap-add tail.
    pub fn reset(&mut self) {
        self.map_in.reset();
        self.ae.reset();
        self.bottleneck_gru.reset();
        self.ae_gru.reset();
        self.ola.reset();
        self.frames = 0;
    }

    pub fn frames_processed(&self) -> u64 {
        self.frames
    }

    pub fn ola(&self) -> &OlaState {
        &self.ola
    }

    pub fn ola_mut(&mut self) -> &mut OlaState {
        &mut self.ola
    }

    pub(crate) fn check(&self, config: &ModelConfig) -> Result<()> {
        let ok = self.map_in.width() == config.map_dim
            && self.map_in.capacity() == config.input_window().max(config.mask_window())
            && self.ae.capacity() == config.mask_lookback
            && self.bottleneck_gru.hidden.len() == config.bottleneck_hidden
            && self.ae_gru.hidden.len() == config.ae_hidden;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("stream state was built for a different model config".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_zero_padded_then_rolls() {
        let mut h = History::new(3, 2);
        let mut out = Vec::new();
        h.extend_recent(3, &mut out);
        assert_eq!(out, vec![0.0; 6]);
        for i in 1..=4 {
            h.push(&[i as f32, -(i as f32)]);
        }
        out.clear();
        h.extend_recent(3, &mut out);
        assert_eq!(out, vec![2.0, -2.0, 3.0, -3.0, 4.0, -4.0]);
        out.clear();
        h.extend_recent(1, &mut out);
        assert_eq!(out, vec![4.0, -4.0]);
        h.reset();
        assert_eq!(h, History::new(3, 2));
    }

    #[test]
    fn zero_capacity_history() {
        let mut h = History::new(0, 4);
        h.push(&[1.0; 4]);
        let mut out = Vec::new();
        h.extend_recent(0, &mut out);
        assert!(out.is_empty());
    }
}
