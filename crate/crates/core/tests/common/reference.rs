//! Straight-line f64 re-implementation of the mask estimator, written from
//! the layer definitions with nested loops and no shared code.

use fbsd::{ModelConfig, ModelWeights};

type Mat = Vec<Vec<f64>>; // [channel][feature]

pub struct Reference<'a> {
    c: &'a ModelConfig,
    w: &'a ModelWeights,
}

fn hswish(x: f64) -> f64 {
    x * (x + 3.0).clamp(0.0, 6.0) / 6.0
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl<'a> Reference<'a> {
    pub fn new(c: &'a ModelConfig, w: &'a ModelWeights) -> Self {
        Self { c, w }
    }

    fn t(&self, name: &str) -> (Vec<usize>, Vec<f64>) {
        let t = self.w.get(name).unwrap_or_else(|| panic!("missing {name}"));
        (t.shape.clone(), t.data.iter().map(|&v| v as f64).collect())
    }

    fn linear(&self, p: &str, x: &[f64]) -> Vec<f64> {
        let (s, w) = self.t(&format!("{p}.weight"));
        let (_, b) = self.t(&format!("{p}.bias"));
        (0..s[0]).map(|o| b[o] + (0..s[1]).map(|i| w[o * s[1] + i] * x[i]).sum::<f64>()).collect()
    }

    fn norm(&self, p: &str, x: &mut Mat) {
        let (_, g) = self.t(&format!("{p}.gamma"));
        let (_, b) = self.t(&format!("{p}.beta"));
        let eps = self.c.norm_eps as f64;
        for (ch, row) in x.iter_mut().enumerate() {
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            for v in row.iter_mut() {
                *v = g[ch] * (*v - mean) / (var + eps).sqrt() + b[ch];
            }
        }
    }

    fn norm_vec(&self, p: &str, x: Vec<f64>) -> Vec<f64> {
        let mut m = vec![x];
        self.norm(p, &mut m);
        m.pop().unwrap()
    }

    fn act(mut x: Mat) -> Mat {
        x.iter_mut().flatten().for_each(|v| *v = hswish(*v));
        x
    }

    /// Cross-correlation, weight `[out, in/groups, k]`, zero padding.
    fn conv(&self, p: &str, x: &Mat, stride: usize, pad_left: usize, pad_right: usize, depthwise: bool) -> Mat {
        let (s, w) = self.t(&format!("{p}.weight"));
        let (_, b) = self.t(&format!("{p}.bias"));
        let (c_out, c_in_g, k) = (s[0], s[1], s[2]);
        let len = x[0].len();
        let padded = len + pad_left + pad_right;
        let n_out = (padded - k) / stride + 1;
        let at = |ch: usize, pos: isize| -> f64 {
            if pos < 0 || pos as usize >= len {
                0.0
            } else {
                x[ch][pos as usize]
            }
        };
        (0..c_out)
            .map(|o| {
                (0..n_out)
                    .map(|j| {
                        let mut acc = b[o];
                        for ci in 0..c_in_g {
                            let ch = if depthwise { o } else { ci };
                            for kk in 0..k {
                                let pos = (j * stride + kk) as isize - pad_left as isize;
                                acc += w[(o * c_in_g + ci) * k + kk] * at(ch, pos);
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Transposed conv, weight `[in, out, k]`: input `i` scatters into
    /// output `i * stride + kk - pad_left`, out-of-range positions dropped.
    fn conv_transposed(&self, p: &str, x: &Mat, stride: usize, pad_left: usize, pad_right: usize) -> Mat {
        let (s, w) = self.t(&format!("{p}.weight"));
        let (_, b) = self.t(&format!("{p}.bias"));
        let (c_in, c_out, k) = (s[0], s[1], s[2]);
        let len = x[0].len();
        let n_out = (len - 1) * stride + k - pad_left - pad_right;
        let mut y: Mat = (0..c_out).map(|o| vec![b[o]; n_out]).collect();
        for ci in 0..c_in {
            for i in 0..len {
                for o in 0..c_out {
                    for kk in 0..k {
                        let pos = (i * stride + kk) as isize - pad_left as isize;
                        if pos >= 0 && (pos as usize) < n_out {
                            y[o][pos as usize] += w[(ci * c_out + o) * k + kk] * x[ci][i];
                        }
                    }
                }
            }
        }
        y
    }

    /// Time-valid, frequency-padded 2D conv; `x[c][t][f]`, weight
    /// `[out, in, kt, kf]`. Returns `[out][f]`.
    fn conv2d(&self, p: &str, x: &[Vec<Vec<f64>>], pad: usize) -> Mat {
        let (s, w) = self.t(&format!("{p}.weight"));
        let (_, b) = self.t(&format!("{p}.bias"));
        let (c_out, c_in, kt, kf) = (s[0], s[1], s[2], s[3]);
        let f_len = x[0][0].len();
        (0..c_out)
            .map(|o| {
                (0..f_len + 2 * pad + 1 - kf)
                    .map(|f| {
                        let mut acc = b[o];
                        for ci in 0..c_in {
                            for tt in 0..kt {
                                for ff in 0..kf {
                                    let pos = (f + ff) as isize - pad as isize;
                                    if pos >= 0 && (pos as usize) < f_len {
                                        acc += w[((o * c_in + ci) * kt + tt) * kf + ff] * x[ci][tt][pos as usize];
                                    }
                                }
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    fn gru(&self, p: &str, x: &[f64], h: &[f64]) -> Vec<f64> {
        let (s, w_ih) = self.t(&format!("{p}.w_ih"));
        let (_, w_hh) = self.t(&format!("{p}.w_hh"));
        let (_, b_ih) = self.t(&format!("{p}.b_ih"));
        let (_, b_hh) = self.t(&format!("{p}.b_hh"));
        let hs = s[0] / 3;
        let ni = s[1];
        let gi = |row: usize| b_ih[row] + (0..ni).map(|i| w_ih[row * ni + i] * x[i]).sum::<f64>();
        let gh = |row: usize| b_hh[row] + (0..hs).map(|i| w_hh[row * hs + i] * h[i]).sum::<f64>();
        (0..hs)
            .map(|j| {
                let r = sigmoid(gi(j) + gh(j));
                let z = sigmoid(gi(hs + j) + gh(hs + j));
                let n = (gi(2 * hs + j) + r * gh(2 * hs + j)).tanh();
                (1.0 - z) * n + z * h[j]
            })
            .collect()
    }

    fn map_in(&self, mag: &[f32]) -> Vec<f64> {
        let x = self.norm_vec("map_in.norm_in", mag.iter().map(|&v| v as f64).collect());
        let h = self.norm_vec("map_in.norm_out", self.linear("map_in.fc", &x));
        h.into_iter().map(hswish).collect()
    }

    fn same_pad(k: usize, s: usize) -> (usize, usize) {
        let total = k.saturating_sub(s);
        let left = total.div_ceil(2);
        (left, total - left)
    }

    /// Masks for a whole utterance from a fresh state.
    pub fn run(&self, frames: &[Vec<f32>]) -> Vec<Vec<f64>> {
        let c = self.c;
        let (tw, tm, m) = (c.encoder_lookback + 1, c.mask_lookback, c.map_dim);
        let nb = c.encoder_kernels.len();
        let zeros = vec![0.0; m];
        let mut hin: Vec<Vec<f64>> = Vec::new();
        let mut hae: Vec<Vec<f64>> = Vec::new();
        let mut h_b = vec![0.0; c.bottleneck_hidden];
        let mut h_ae = vec![0.0; c.ae_hidden];
        let mut masks = Vec::new();
        let past = |hist: &Vec<Vec<f64>>, t: isize| -> Vec<f64> {
            if t < 0 {
                zeros.clone()
            } else {
                hist[t as usize].clone()
            }
        };
        for (t, mag) in frames.iter().enumerate() {
            let t = t as isize;
            hin.push(self.map_in(mag));
            let window: Vec<Vec<f64>> = (0..tw as isize).map(|i| past(&hin, t - tw as isize + 1 + i)).collect();

            let mut x = self.conv2d("encoder.entry", &[window], c.entry_freq_kernel / 2);
            self.norm("encoder.entry.norm", &mut x);
            x = Self::act(x);
            let mut skips = Vec::new();
            for i in 0..nb {
                let p = format!("encoder.block{i}");
                let (k, s) = (c.encoder_kernels[i], c.encoder_strides[i]);
                let (pl, pr) = Self::same_pad(k, s);
                let mut y = self.conv(&format!("{p}.expand"), &x, 1, 0, 0, false);
                self.norm(&format!("{p}.expand_norm"), &mut y);
                let mut y = self.conv(&format!("{p}.depthwise"), &Self::act(y), s, pl, pr, true);
                self.norm(&format!("{p}.depthwise_norm"), &mut y);
                let mut y = self.conv(&format!("{p}.project"), &Self::act(y), 1, 0, 0, false);
                self.norm(&format!("{p}.project_norm"), &mut y);
                skips.push(y.clone());
                x = y;
            }

            // Bottleneck: squeeze the feature axis, GRU over channels.
            let (sq_s, sq_w) = self.t("bottleneck.squeeze.weight");
            let (_, sq_b) = self.t("bottleneck.squeeze.bias");
            let f_last = sq_s[1];
            let squeezed: Vec<f64> =
                x.iter().map(|row| sq_b[0] + (0..f_last).map(|f| sq_w[f] * row[f]).sum::<f64>()).collect();
            h_b = self.gru("bottleneck.gru", &squeezed, &h_b);
            let (_, ex_w) = self.t("bottleneck.expand.weight");
            let (_, ex_b) = self.t("bottleneck.expand.bias");
            let mut x: Mat = h_b.iter().map(|&h| (0..f_last).map(|f| ex_w[f] * h + ex_b[f]).collect()).collect();

            for d in 0..nb {
                let p = format!("decoder.block{d}");
                let mirror = nb - 1 - d;
                let (k, s) = (c.encoder_kernels[mirror], c.encoder_strides[mirror]);
                let (pl, pr) = Self::same_pad(k, s);
                let mut cat = x.clone();
                cat.extend(skips[mirror].iter().cloned());
                let mut y = self.conv(&format!("{p}.fuse"), &cat, 1, 0, 0, false);
                self.norm(&format!("{p}.fuse_norm"), &mut y);
                let mut y = self.conv_transposed(&format!("{p}.up"), &Self::act(y), s, pl, pr);
                self.norm(&format!("{p}.up_norm"), &mut y);
                x = Self::act(y);
            }
            let h_d = self.conv("decoder.collapse", &x, 1, 0, 0, false).remove(0);

            let a: Vec<f64> =
                self.norm_vec("ae.down_norm", self.linear("ae.down", &h_d)).into_iter().map(hswish).collect();
            h_ae = self.gru("ae.gru", &a, &h_ae);
            let ae_out = self.norm_vec("ae.up_norm", self.linear("ae.up", &h_ae));

            let in_stack: Vec<Vec<f64>> = (0..=tm as isize).map(|i| past(&hin, t - tm as isize + i)).collect();
            let mut ae_stack: Vec<Vec<f64>> = (0..tm as isize).map(|i| past(&hae, t - tm as isize + i)).collect();
            ae_stack.push(ae_out.clone());
            hae.push(ae_out);
            let h_m = self.conv2d("mask.conv", &[in_stack, ae_stack], c.mask_freq_kernel / 2).remove(0);

            masks.push(self.linear("map_out.fc", &h_m).into_iter().map(sigmoid).collect());
        }
        masks
    }
}
