use crate::model::ModelConfig;
use crate::nn::{Conv2dSpec, ConvSpec, GruSpec};

/// How a tensor is filled by [`random_init`](super::random_init).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Uniform(f32),
    Ones,
    Zeros,
}

/// One named tensor in the canonical weight layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Names whose tensors belong to the input/output mapping sub-modules.
pub fn is_mapping(name: &str) -> bool {
    name.starts_with("map_in.") || name.starts_with("map_out.")
}

struct Builder {
    specs: Vec<ParamSpec>,
}

impl Builder {
    fn push(&mut self, name: String, shape: Vec<usize>, init: Init) {
        self.specs.push(ParamSpec { name, shape, init });
    }

    fn affine(&mut self, prefix: &str, weight_shape: Vec<usize>, out: usize, fan_in: usize) {
        let bound = Init::Uniform(1.0 / (fan_in as f32).sqrt());
        self.push(format!("{prefix}.weight"), weight_shape, bound);
        self.push(format!("{prefix}.bias"), vec![out], bound);
    }

    fn linear(&mut self, prefix: &str, input: usize, output: usize) {
        self.affine(prefix, vec![output, input], output, input);
    }

    fn conv(&mut self, prefix: &str, spec: &ConvSpec) {
        self.affine(prefix, spec.weight_shape().to_vec(), spec.out_channels, spec.fan_in());
    }

    fn conv2d(&mut self, prefix: &str, spec: &Conv2dSpec) {
        self.affine(prefix, spec.weight_shape().to_vec(), spec.out_channels, spec.fan_in());
    }

    fn norm(&mut self, prefix: &str, channels: usize) {
        self.push(format!("{prefix}.gamma"), vec![channels], Init::Ones);
        self.push(format!("{prefix}.beta"), vec![channels], Init::Zeros);
    }

    fn gru(&mut self, prefix: &str, spec: &GruSpec) {
        let bound = Init::Uniform(1.0 / (spec.hidden_size as f32).sqrt());
        let g = 3 * spec.hidden_size;
        self.push(format!("{prefix}.w_ih"), spec.input_weight_shape().to_vec(), bound);
        self.push(format!("{prefix}.w_hh"), spec.hidden_weight_shape().to_vec(), bound);
        self.push(format!("{prefix}.b_ih"), vec![g], bound);
        self.push(format!("{prefix}.b_hh"), vec![g], bound);
    }
}

/// Canonical, ordered list of every tensor the model reads. The config is
/// assumed valid.
pub fn layout(config: &ModelConfig) -> Vec<ParamSpec> {
    let mut b = Builder { specs: Vec::new() };
    let (f, m) = (config.freq_bins, config.map_dim);

    b.norm("map_in.norm_in", 1);
    b.linear("map_in.fc", f, m);
    b.norm("map_in.norm_out", 1);

    let entry = config.entry_conv();
    b.conv2d("encoder.entry", &entry);
    b.norm("encoder.entry.norm", entry.out_channels);
    for i in 0..config.num_blocks() {
        let blk = config.encoder_block(i);
        let p = format!("encoder.block{i}");
        b.conv(&format!("{p}.expand"), &blk.expand);
        b.norm(&format!("{p}.expand_norm"), blk.expand.out_channels);
        b.conv(&format!("{p}.depthwise"), &blk.depthwise);
        b.norm(&format!("{p}.depthwise_norm"), blk.depthwise.out_channels);
        b.conv(&format!("{p}.project"), &blk.project);
        b.norm(&format!("{p}.project_norm"), blk.project.out_channels);
    }

    b.conv("bottleneck.squeeze", &config.bottleneck_squeeze());
    b.gru("bottleneck.gru", &config.bottleneck_gru());
    b.conv("bottleneck.expand", &config.bottleneck_expand());

    for d in 0..config.num_blocks() {
        let blk = config.decoder_block(d);
        let p = format!("decoder.block{d}");
        b.conv(&format!("{p}.fuse"), &blk.fuse);
        b.norm(&format!("{p}.fuse_norm"), blk.fuse.out_channels);
        b.conv(&format!("{p}.up"), &blk.up);
        b.norm(&format!("{p}.up_norm"), blk.up.out_channels);
    }
    b.conv("decoder.collapse", &config.decoder_collapse());

    b.linear("ae.down", m, config.ae_hidden);
    b.norm("ae.down_norm", 1);
    b.gru("ae.gru", &config.ae_gru());
    b.linear("ae.up", config.ae_hidden, m);
    b.norm("ae.up_norm", 1);

    b.conv2d("mask.conv", &config.mask_conv());
    b.linear("map_out.fc", m, f);
    b.specs
}
