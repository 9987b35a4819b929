use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use fbsd::metrics::{evaluate, EvalReport};
use fbsd::mix::{mix, segment, MixSpec};
use fbsd::weights::{load, save};
use fbsd::{
    measure_rtf, random_init, read_wav, read_wav_48k, write_wav, CostReport, Denoiser, Model, ModelConfig, RtfConfig,
    WavBlockReader, WavBlockWriter, WavEncoding, SAMPLE_RATE,
};

/// Causal full-band speech denoiser.
#[derive(Parser)]
#[command(name = "fbsd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a 48 kHz mono WAV file, streaming hop by hop.
    Denoise {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// Write 16-bit PCM instead of 32-bit float.
        #[arg(long)]
        pcm16: bool,
    },
    /// Mix clean speech with one or two noise files at an integer SNR.
    Mix(MixArgs),
    /// Score processed audio against clean references (files or directories).
    Eval {
        clean: PathBuf,
        processed: PathBuf,
        /// Write one JSON object per utterance here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Measure the real-time factor of the streaming step.
    Bench(BenchArgs),
    /// Print parameter and MAC counts.
    Info {
        /// Read the config from a weight file header.
        #[arg(long, conflicts_with = "config")]
        weights: Option<PathBuf>,
        /// Read the config from a JSON file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Write randomly initialized weights.
    InitWeights {
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON model config; the default architecture otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MixArgs {
    #[arg(long)]
    clean: PathBuf,
    /// Noise file; give twice to sum two noises.
    #[arg(long = "noise", required = true)]
    noises: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Integer SNR in dB, [-10, 25]; drawn from the seed when omitted.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<i32>,
    /// Mixture peak in [0.001, 0.999]; drawn from the seed when omitted.
    #[arg(long)]
    peak: Option<f32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the scaled clean and noise components next to the output.
    #[arg(long)]
    components: bool,
    /// Also write 4 s segments (front-padded) next to the output.
    #[arg(long)]
    segment: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Weight file; seeded random weights for the default config otherwise.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    passes: usize,
    #[arg(long, default_value_t = 1)]
    hops_per_pass: usize,
    #[arg(long, default_value_t = 10)]
    warmup: usize,
    /// Report only the core timing (mapping sub-modules skipped).
    #[arg(long)]
    no_mapping: bool,
    /// Time STFT analysis and synthesis too.
    #[arg(long)]
    include_dsp: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Denoise { input, output, weights, pcm16 } => cmd_denoise(&input, &output, &weights, pcm16),
        Command::Mix(args) => cmd_mix(&args),
        Command::Eval { clean, processed, report } => cmd_eval(&clean, &processed, report.as_deref()),
        Command::Bench(args) => cmd_bench(&args),
        Command::Info { weights, config, json } => cmd_info(weights.as_deref(), config.as_deref(), json),
        Command::InitWeights { output, seed, config } => cmd_init_weights(&output, seed, config.as_deref()),
    }
}

fn load_model(path: &Path) -> Result<Model> {
    let (weights, config) = load(path).with_context(|| format!("loading weights from {}", path.display()))?;
    Model::from_weights(&config, &weights).with_context(|| format!("building model from {}", path.display()))
}

fn read_config(path: &Path) -> Result<ModelConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: ModelConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    config.validate()?;
    Ok(config)
}

fn cmd_denoise(input: &Path, output: &Path, weights: &Path, pcm16: bool) -> Result<()> {
    let model = load_model(weights)?;
    let mut reader = WavBlockReader::open(input)?;
    ensure!(
        reader.sample_rate() == SAMPLE_RATE,
        "{} is sampled at {} Hz; the denoiser needs {SAMPLE_RATE} Hz",
        input.display(),
        reader.sample_rate()
    );
    let encoding = if pcm16 { WavEncoding::Pcm16 } else { WavEncoding::Float32 };
    let mut writer = WavBlockWriter::create(output, SAMPLE_RATE, encoding)?;
    let mut denoiser = Denoiser::new(&model);
    let t0 = Instant::now();
    let n = denoiser.process_stream(|b| reader.read_block(b), |y| writer.write_block(y))?;
    let wall = t0.elapsed().as_secs_f64();
    writer.finalize()?;
    let audio_secs = n as f64 / SAMPLE_RATE as f64;
    println!(
        "{}: {} samples, {} frames processed in {wall:.3} s (RTF {:.4})",
        output.display(),
        n,
        denoiser.frames_processed(),
        if audio_secs > 0.0 { wall / audio_secs } else { 0.0 }
    );
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.wav"))
}

fn cmd_mix(a: &MixArgs) -> Result<()> {
    let clean = read_wav_48k(&a.clean)?;
    let noises = a.noises.iter().map(read_wav_48k).collect::<fbsd::Result<Vec<_>>>()?;
    let sampled = MixSpec::sample(a.seed);
    let spec = MixSpec { snr_db: a.snr.unwrap_or(sampled.snr_db), peak: a.peak.unwrap_or(sampled.peak), seed: a.seed };
    let m = mix(&clean, &noises, &spec)?;
    write_wav(&a.out, &m.mixture, WavEncoding::Float32)?;
    if a.components {
        write_wav(with_suffix(&a.out, "clean"), &m.clean, WavEncoding::Float32)?;
        write_wav(with_suffix(&a.out, "noise"), &m.noise, WavEncoding::Float32)?;
    }
    let mut segments = 0;
    if a.segment {
        for (kind, audio) in [("mix", &m.mixture), ("clean", &m.clean)] {
            for (i, seg) in segment(audio).iter().enumerate() {
                write_wav(with_suffix(&a.out, &format!("{kind}_{i:03}")), seg, WavEncoding::Float32)?;
                segments = i + 1;
            }
        }
    }
    println!(
        "{}: snr {} dB, peak {:.3}, seed {}, {} noise file(s){}",
        a.out.display(),
        spec.snr_db,
        spec.peak,
        spec.seed,
        noises.len(),
        if a.segment { format!(", {segments} segments of 4 s") } else { String::new() }
    );
    Ok(())
}

/// (name, clean, processed) pairs: a single pair of files, or every WAV in
/// the clean directory with a same-named file in the processed directory.
fn eval_pairs(clean: &Path, processed: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    if clean.is_dir() {
        ensure!(processed.is_dir(), "{} is a directory but {} is not", clean.display(), processed.display());
        let mut pairs = Vec::new();
        for entry in std::fs::read_dir(clean).with_context(|| format!("listing {}", clean.display()))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
                let name = path.file_name().unwrap().to_owned();
                let other = processed.join(&name);
                ensure!(other.exists(), "no processed file for {}", path.display());
                pairs.push((name.to_string_lossy().into_owned(), path, other));
            }
        }
        ensure!(!pairs.is_empty(), "no WAV files in {}", clean.display());
        pairs.sort();
        Ok(pairs)
    } else {
        let name = clean.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(vec![(name, clean.to_path_buf(), processed.to_path_buf())])
    }
}

fn cmd_eval(clean: &Path, processed: &Path, report: Option<&Path>) -> Result<()> {
    let mut out = EvalReport::default();
    for (name, c, p) in eval_pairs(clean, processed)? {
        let (ca, pa) = (read_wav(&c)?, read_wav(&p)?);
        ensure!(ca.len() == pa.len(), "{name}: clean has {} samples, processed has {}", ca.len(), pa.len());
        out.push(evaluate(name.clone(), &ca, &pa).with_context(|| format!("scoring {name}"))?);
    }
    print!("{}", out.summary_table());
    if let Some(path) = report {
        std::fs::write(path, out.json_lines()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    match std::env::var("FBSD_THREADS") {
        Ok(v) if v != "1" => eprintln!("note: FBSD_THREADS={v} overridden; bench runs single-threaded"),
        _ => {}
    }
    std::env::set_var("FBSD_THREADS", "1");
    let model = match &a.weights {
        Some(p) => load_model(p)?,
        None => {
            let c = ModelConfig::default();
            Model::from_weights(&c, &random_init(&c, a.seed)?)?
        }
    };
    let cfg = RtfConfig {
        passes: a.passes,
        hops_per_pass: a.hops_per_pass,
        warmup: a.warmup,
        include_dsp: a.include_dsp,
        seed: a.seed,
    };
    let r = measure_rtf(&model, &cfg)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&r)?);
        return Ok(());
    }
    println!(
        "{} passes x {} hop(s), {} warm-up, timed region: {}",
        r.passes,
        r.hops_per_pass,
        a.warmup,
        if r.include_dsp { "STFT + network + ISTFT" } else { "network only" }
    );
    let ms = |s: f64| s * 1e3 / r.hops_per_pass as f64;
    let rows = [("without mapping", r.without_mapping), ("with mapping", r.with_mapping)];
    for (label, t) in rows.iter().filter(|(l, _)| !a.no_mapping || *l == "without mapping") {
        println!(
            "{label:<16} RTF {:.4}  mean {:.3} ms/step  median {:.3} ms/step",
            t.rtf,
            ms(t.mean_secs),
            ms(t.median_secs)
        );
    }
    Ok(())
}

fn thousands(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn cmd_info(weights: Option<&Path>, config: Option<&Path>, json: bool) -> Result<()> {
    let (config, source) = match (weights, config) {
        (Some(w), _) => (load(w).with_context(|| format!("loading {}", w.display()))?.1, w.display().to_string()),
        (None, Some(c)) => (read_config(c)?, c.display().to_string()),
        (None, None) => (ModelConfig::default(), "default config".to_string()),
    };
    let r = CostReport::new(&config)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&r)?);
        return Ok(());
    }
    let p = r.params;
    let m = |n: usize| format!("{:.3} M ({})", n as f64 / 1e6, thousands(n as u64));
    println!("model: {source}");
    println!("parameters");
    println!("  total    {}", m(p.total));
    println!("  mapping  {}  [affines only: {}]", m(p.mapping), thousands(p.mapping_fnn as u64));
    println!("  core     {}", m(p.core));
    println!("MACs per frame ({} frames/s)", r.frames_per_second);
    println!("  total    {:>12}  {:.4} G/s", thousands(r.macs_per_frame()), r.macs_per_second() / 1e9);
    println!("  core     {:>12}  {:.4} G/s", thousands(r.core_macs_per_frame()), r.core_macs_per_second() / 1e9);
    let b = r.macs;
    for (name, v) in [
        ("map_in", b.map_in),
        ("encoder", b.encoder),
        ("bottleneck", b.bottleneck),
        ("decoder", b.decoder),
        ("ae", b.ae),
        ("mask_head", b.mask_head),
        ("map_out", b.map_out),
    ] {
        println!("    {name:<10} {:>12}", thousands(v));
    }
    Ok(())
}

fn cmd_init_weights(output: &Path, seed: u64, config: Option<&Path>) -> Result<()> {
    let config = match config {
        Some(c) => read_config(c)?,
        None => ModelConfig::default(),
    };
    let weights = random_init(&config, seed)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        if !dir.exists() {
            bail!("directory {} does not exist", dir.display());
        }
    }
    save(&weights, &config, output).with_context(|| format!("writing {}", output.display()))?;
    println!("{}: {} tensors, {} parameters, seed {seed}", output.display(), weights.len(), weights.num_scalars());
    Ok(())
}
