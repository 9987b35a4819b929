use super::{axpy, check_finite, check_len, Tensor2, Tensor3};
use crate::error::{shape_err, Error, Result};

/// Shape of a 1D convolution layer, independent of its weights.
///
/// Convolution is cross-correlation (no kernel flip). A transposed layer with
/// the same spec is the exact adjoint of the forward one, padding included:
/// the forward pass pads `pad_left`/`pad_right` zeros, the transposed pass
/// crops the same amounts from its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad_left: usize,
    pub pad_right: usize,
    pub depthwise: bool,
    pub transposed: bool,
}

impl ConvSpec {
    pub fn pointwise(in_channels: usize, out_channels: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel: 1,
            stride: 1,
            pad_left: 0,
            pad_right: 0,
            depthwise: false,
            transposed: false,
        }
    }

    /// "Same"-style padding: stride 1 keeps the length, stride 2 halves an
    /// even length. Odd totals put the extra zero on the left.
    pub fn same_padding(kernel: usize, stride: usize) -> (usize, usize) {
        let total = kernel.saturating_sub(stride);
        let left = total.div_ceil(2);
        (left, total - left)
    }

    pub fn groups(&self) -> usize {
        if self.depthwise {
            self.in_channels
        } else {
            1
        }
    }

    pub fn weight_shape(&self) -> [usize; 3] {
        let g = self.groups();
        if self.transposed {
            [self.in_channels, self.out_channels / g, self.kernel]
        } else {
            [self.out_channels, self.in_channels / g, self.kernel]
        }
    }

    pub fn weight_len(&self) -> usize {
        self.weight_shape().iter().product()
    }

    pub fn param_count(&self) -> usize {
        self.weight_len() + self.out_channels
    }

    /// Fan-in used for initialization bounds (second weight axis times
    /// kernel, for both directions).
    pub fn fan_in(&self) -> usize {
        let [_, per_group, k] = self.weight_shape();
        per_group * k
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel == 0 || self.stride == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::InvalidArgument(format!("degenerate conv spec {self:?}")));
        }
        if self.depthwise && self.in_channels != self.out_channels {
            return Err(Error::InvalidArgument(format!(
                "depthwise conv needs in == out channels, got {} -> {}",
                self.in_channels, self.out_channels
            )));
        }
        Ok(())
    }

    pub fn output_len(&self, input_len: usize) -> Result<usize> {
        let pad = self.pad_left + self.pad_right;
        if self.transposed {
            let full = (input_len.max(1) - 1) * self.stride + self.kernel;
            if input_len == 0 || full <= pad {
                return Err(shape_err("transposed conv input", "longer input", input_len));
            }
            Ok(full - pad)
        } else {
            if input_len + pad < self.kernel {
                return Err(shape_err("conv input after padding", format!(">= {}", self.kernel), input_len + pad));
            }
            Ok((input_len + pad - self.kernel) / self.stride + 1)
        }
    }

    /// Multiply-accumulates for one input of `input_len` features.
    pub fn macs(&self, input_len: usize) -> u64 {
        let per_group_in = self.in_channels / self.groups();
        if self.transposed {
            // Every input element scatters into out/groups * kernel outputs.
            (self.in_channels * input_len * (self.out_channels / self.groups()) * self.kernel) as u64
        } else {
            let out_len = self.output_len(input_len).unwrap_or(0);
            (self.out_channels * out_len * per_group_in * self.kernel) as u64
        }
    }
}

/// A 1D convolution (optionally depthwise, strided or transposed) with bias.
#[derive(Debug, Clone)]
pub struct Conv1d {
    spec: ConvSpec,
    weight: Vec<f32>,
    bias: Vec<f32>,
    /// Pointwise: `[in, out]`. Other layouts use `weight` directly.
    weight_t: Vec<f32>,
}

impl Conv1d {
    pub fn new(spec: ConvSpec, weight: &[f32], bias: &[f32]) -> Result<Self> {
        spec.validate()?;
        check_len("conv weight", spec.weight_len(), weight.len())?;
        check_len("conv bias", spec.out_channels, bias.len())?;
        check_finite("conv weight", weight)?;
        check_finite("conv bias", bias)?;
        let weight_t = if spec.kernel == 1 && !spec.depthwise && !spec.transposed {
            let (ci, co) = (spec.in_channels, spec.out_channels);
            let mut t = vec![0.0; ci * co];
            for o in 0..co {
                for i in 0..ci {
                    t[i * co + o] = weight[o * ci + i];
                }
            }
            t
        } else {
            Vec::new()
        };
        Ok(Self { spec, weight: weight.to_vec(), bias: bias.to_vec(), weight_t })
    }

    pub fn spec(&self) -> &ConvSpec {
        &self.spec
    }

    pub fn forward(&self, x: &Tensor2) -> Result<Tensor2> {
        check_len("conv input channels", self.spec.in_channels, x.channels())?;
        let out_len = self.spec.output_len(x.features())?;
        let mut out = Tensor2::zeros(self.spec.out_channels, out_len);
        let s = &self.spec;
        match (s.transposed, s.depthwise) {
            (false, false) if s.kernel == 1 && s.stride == 1 && s.pad_left == 0 && s.pad_right == 0 => {
                self.pointwise(x, &mut out)
            }
            (false, true) => self.depthwise(x, &mut out),
            (false, false) => self.dense(x, &mut out),
            (true, false) => self.transposed_dense(x, &mut out),
            (true, true) => self.transposed_depthwise(x, &mut out),
        }
        Ok(out)
    }

    fn add_bias(&self, out: &mut Tensor2) {
        for (c, &b) in self.bias.iter().enumerate() {
            out.row_mut(c).iter_mut().for_each(|v| *v += b);
        }
    }

    fn pointwise(&self, x: &Tensor2, out: &mut Tensor2) {
        let (ci, co, f) = (self.spec.in_channels, self.spec.out_channels, x.features());
        if f >= co {
            // Rows of features are the long axis.
            for o in 0..co {
                let row = out.row_mut(o);
                row.fill(self.bias[o]);
                for i in 0..ci {
                    axpy(self.weight[o * ci + i], x.row(i), row);
                }
            }
        } else {
            // Few features: accumulate over output channels instead.
            let mut acc = vec![0.0f32; co];
            for t in 0..f {
                acc.copy_from_slice(&self.bias);
                for i in 0..ci {
                    axpy(x.row(i)[t], &self.weight_t[i * co..(i + 1) * co], &mut acc);
                }
                for (o, v) in acc.iter().enumerate() {
                    out.data_mut()[o * f + t] = *v;
                }
            }
        }
    }

    fn padded(&self, row: &[f32]) -> Vec<f32> {
        let mut p = vec![0.0; self.spec.pad_left + row.len() + self.spec.pad_right];
        p[self.spec.pad_left..self.spec.pad_left + row.len()].copy_from_slice(row);
        p
    }

    /// `out += w * padded[k + o * stride]` for every output position `o`.
    fn tap(padded: &[f32], w: f32, k: usize, stride: usize, out: &mut [f32]) {
        if stride == 1 {
            axpy(w, &padded[k..k + out.len()], out);
        } else {
            for (o, v) in out.iter_mut().enumerate() {
                *v += w * padded[k + o * stride];
            }
        }
    }

    fn depthwise(&self, x: &Tensor2, out: &mut Tensor2) {
        let k = self.spec.kernel;
        for c in 0..self.spec.in_channels {
            let padded = self.padded(x.row(c));
            let row = out.row_mut(c);
            for j in 0..k {
                Self::tap(&padded, self.weight[c * k + j], j, self.spec.stride, row);
            }
        }
        self.add_bias(out);
    }

    fn dense(&self, x: &Tensor2, out: &mut Tensor2) {
        let (ci, k) = (self.spec.in_channels, self.spec.kernel);
        let padded: Vec<Vec<f32>> = (0..ci).map(|i| self.padded(x.row(i))).collect();
        for o in 0..self.spec.out_channels {
            let row = out.row_mut(o);
            for (i, p) in padded.iter().enumerate() {
                for j in 0..k {
                    Self::tap(p, self.weight[(o * ci + i) * k + j], j, self.spec.stride, row);
                }
            }
        }
        self.add_bias(out);
    }

    /// Scatter `contrib[(o, j)]` of input position `i` to output
    /// `i * stride + j - pad_left`, dropping cropped positions.
    fn scatter(&self, i: usize, o: usize, contrib: &[f32], out: &mut Tensor2) {
        let out_len = out.features();
        let base = (i * self.spec.stride) as isize - self.spec.pad_left as isize;
        let row = out.row_mut(o);
        for (j, &v) in contrib.iter().enumerate() {
            let pos = base + j as isize;
            if pos >= 0 && (pos as usize) < out_len {
                row[pos as usize] += v;
            }
        }
    }

    fn transposed_dense(&self, x: &Tensor2, out: &mut Tensor2) {
        let (ci, co, k) = (self.spec.in_channels, self.spec.out_channels, self.spec.kernel);
        // Weight rows are [in][out * k], so one input element scales a
        // contiguous block covering every output channel and tap.
        let mut cols = vec![0.0f32; co * k];
        for i in 0..x.features() {
            cols.fill(0.0);
            for c in 0..ci {
                let v = x.row(c)[i];
                if v != 0.0 {
                    axpy(v, &self.weight[c * co * k..(c + 1) * co * k], &mut cols);
                }
            }
            for o in 0..co {
                self.scatter(i, o, &cols[o * k..(o + 1) * k], out);
            }
        }
        self.add_bias(out);
    }

    fn transposed_depthwise(&self, x: &Tensor2, out: &mut Tensor2) {
        let k = self.spec.kernel;
        let mut cols = vec![0.0f32; k];
        for c in 0..self.spec.in_channels {
            let w = &self.weight[c * k..(c + 1) * k];
            for i in 0..x.features() {
                let v = x.row(c)[i];
                cols.iter_mut().zip(w).for_each(|(d, w)| *d = v * w);
                self.scatter(i, c, &cols, out);
            }
        }
        self.add_bias(out);
    }
}

/// Shape of a 2D convolution over (time, frequency). Time is always
/// "valid" with stride 1; frequency is zero-padded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_time: usize,
    pub kernel_freq: usize,
    pub pad_freq_left: usize,
    pub pad_freq_right: usize,
}

impl Conv2dSpec {
    pub fn weight_shape(&self) -> [usize; 4] {
        [self.out_channels, self.in_channels, self.kernel_time, self.kernel_freq]
    }

    pub fn param_count(&self) -> usize {
        self.weight_shape().iter().product::<usize>() + self.out_channels
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * self.kernel_time * self.kernel_freq
    }

    pub fn output_len(&self, freq_len: usize) -> Result<usize> {
        let padded = freq_len + self.pad_freq_left + self.pad_freq_right;
        if padded < self.kernel_freq {
            return Err(shape_err("conv2d freq after padding", format!(">= {}", self.kernel_freq), padded));
        }
        Ok(padded - self.kernel_freq + 1)
    }

    pub fn macs(&self, freq_len: usize) -> u64 {
        let out = self.output_len(freq_len).unwrap_or(0);
        (self.out_channels * out * self.fan_in()) as u64
    }
}

/// 2D convolution whose time kernel covers the whole input window, so the
/// time axis collapses to a single step.
#[derive(Debug, Clone)]
pub struct Conv2d {
    spec: Conv2dSpec,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Conv2d {
    pub fn new(spec: Conv2dSpec, weight: &[f32], bias: &[f32]) -> Result<Self> {
        if spec.kernel_time == 0 || spec.kernel_freq == 0 || spec.in_channels == 0 || spec.out_channels == 0 {
            return Err(Error::InvalidArgument(format!("degenerate conv2d spec {spec:?}")));
        }
        check_len("conv2d weight", spec.weight_shape().iter().product(), weight.len())?;
        check_len("conv2d bias", spec.out_channels, bias.len())?;
        check_finite("conv2d weight", weight)?;
        check_finite("conv2d bias", bias)?;
        Ok(Self { spec, weight: weight.to_vec(), bias: bias.to_vec() })
    }

    pub fn spec(&self) -> &Conv2dSpec {
        &self.spec
    }

    pub fn forward(&self, x: &Tensor3) -> Result<Tensor2> {
        let (ci, t, f) = x.shape();
        let s = &self.spec;
        check_len("conv2d input channels", s.in_channels, ci)?;
        check_len("conv2d input time extent", s.kernel_time, t)?;
        let out_len = s.output_len(f)?;
        let mut out = Tensor2::zeros(s.out_channels, out_len);
        for (o, &b) in self.bias.iter().enumerate() {
            out.row_mut(o).fill(b);
        }
        let mut padded = vec![0.0f32; s.pad_freq_left + f + s.pad_freq_right];
        for c in 0..ci {
            for tt in 0..t {
                padded[s.pad_freq_left..s.pad_freq_left + f].copy_from_slice(x.row(c, tt));
                for o in 0..s.out_channels {
                    let base = ((o * ci + c) * s.kernel_time + tt) * s.kernel_freq;
                    let row = out.row_mut(o);
                    for j in 0..s.kernel_freq {
                        axpy(self.weight[base + j], &padded[j..j + out_len], row);
                    }
                }
            }
        }
        Ok(out)
    }
}
