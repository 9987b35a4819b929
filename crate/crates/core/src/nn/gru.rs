use super::{axpy, check_finite, check_len, sigmoid};
use crate::error::Result;

/// Single-layer GRU dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruSpec {
    pub input_size: usize,
    pub hidden_size: usize,
}

impl GruSpec {
    pub fn input_weight_shape(&self) -> [usize; 2] {
        [3 * self.hidden_size, self.input_size]
    }

    pub fn hidden_weight_shape(&self) -> [usize; 2] {
        [3 * self.hidden_size, self.hidden_size]
    }

    pub fn param_count(&self) -> usize {
        let h = self.hidden_size;
        3 * h * self.input_size + 3 * h * h + 6 * h
    }

    pub fn macs(&self) -> u64 {
        (3 * self.hidden_size * (self.input_size + self.hidden_size)) as u64
    }
}

/// Hidden vector carried between frames. Zero at stream start.
#[derive(Debug, Clone, PartialEq)]
pub struct GruState {
    pub hidden: Vec<f32>,
}

impl GruState {
    pub fn zeros(hidden_size: usize) -> Self {
        Self { hidden: vec![0.0; hidden_size] }
    }

    pub fn reset(&mut self) {
        self.hidden.fill(0.0);
    }
}

/// GRU cell with gate rows ordered (reset, update, candidate) and separate
/// input/hidden biases:
///
/// ```text
/// r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
/// z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
/// n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
/// h' = (1 - z) * n + z * h
/// ```
#[derive(Debug, Clone)]
pub struct GruCell {
    spec: GruSpec,
    /// `[input, 3H]` and `[hidden, 3H]` transposes of the framework layout.
    w_ih_t: Vec<f32>,
    w_hh_t: Vec<f32>,
    b_ih: Vec<f32>,
    b_hh: Vec<f32>,
}

impl GruCell {
    pub fn new(spec: GruSpec, w_ih: &[f32], w_hh: &[f32], b_ih: &[f32], b_hh: &[f32]) -> Result<Self> {
        let g = 3 * spec.hidden_size;
        check_len("gru w_ih", g * spec.input_size, w_ih.len())?;
        check_len("gru w_hh", g * spec.hidden_size, w_hh.len())?;
        check_len("gru b_ih", g, b_ih.len())?;
        check_len("gru b_hh", g, b_hh.len())?;
        for (name, t) in [("gru w_ih", w_ih), ("gru w_hh", w_hh), ("gru b_ih", b_ih), ("gru b_hh", b_hh)] {
            check_finite(name, t)?;
        }
        Ok(Self {
            spec,
            w_ih_t: transpose(w_ih, g, spec.input_size),
            w_hh_t: transpose(w_hh, g, spec.hidden_size),
            b_ih: b_ih.to_vec(),
            b_hh: b_hh.to_vec(),
        })
    }

    pub fn spec(&self) -> GruSpec {
        self.spec
    }

    pub fn step(&self, x: &[f32], state: &mut GruState) -> Result<()> {
        check_len("gru input", self.spec.input_size, x.len())?;
        check_len("gru hidden", self.spec.hidden_size, state.hidden.len())?;
        let h = self.spec.hidden_size;
        let mut gi = self.b_ih.clone();
        for (j, &v) in x.iter().enumerate() {
            axpy(v, &self.w_ih_t[j * 3 * h..(j + 1) * 3 * h], &mut gi);
        }
        let mut gh = self.b_hh.clone();
        for (j, &v) in state.hidden.iter().enumerate() {
            axpy(v, &self.w_hh_t[j * 3 * h..(j + 1) * 3 * h], &mut gh);
        }
        for k in 0..h {
            let r = sigmoid(gi[k] + gh[k]);
            let z = sigmoid(gi[h + k] + gh[h + k]);
            let n = (gi[2 * h + k] + r * gh[2 * h + k]).tanh();
            state.hidden[k] = (1.0 - z) * n + z * state.hidden[k];
        }
        Ok(())
    }
}

fn transpose(w: &[f32], rows: usize, cols: usize) -> Vec<f32> {
    let mut t = vec![0.0; w.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = w[r * cols + c];
        }
    }
    t
}
