//! Mono audio buffers and WAV I/O.
//!
//! Only mono files are accepted. Integer PCM (16 and 24 bit) is scaled to
//! [-1, 1); 32-bit float is read as is.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

pub const SAMPLE_RATE: u32 = 48_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }
}

/// Output sample encoding for [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    #[default]
    Float32,
}

enum Decoder {
    Float,
    Int(f32),
}

/// Incremental mono WAV reader yielding `f32` samples in [-1, 1).
pub struct WavBlockReader {
    reader: WavReader<std::io::BufReader<std::fs::File>>,
    decoder: Decoder,
    path: std::path::PathBuf,
}

impl WavBlockReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = WavReader::open(path).map_err(|source| Error::Wav { path: path.to_path_buf(), source })?;
        let spec = reader.spec();
        if spec.channels != 1 {
            return Err(Error::UnsupportedAudio(format!(
                "{} has {} channels; only mono input is supported",
                path.display(),
                spec.channels
            )));
        }
        let decoder = match (spec.sample_format, spec.bits_per_sample) {
            (SampleFormat::Float, 32) => Decoder::Float,
            (SampleFormat::Int, bits @ (16 | 24)) => Decoder::Int(1.0 / (1u32 << (bits - 1)) as f32),
            (fmt, bits) => {
                return Err(Error::UnsupportedAudio(format!(
                    "{}: {bits}-bit {fmt:?} samples are not supported (use PCM16, PCM24 or float32)",
                    path.display()
                )))
            }
        };
        Ok(Self { reader, decoder, path: path.to_path_buf() })
    }

    pub fn sample_rate(&self) -> u32 {
        self.reader.spec().sample_rate
    }

    /// Total samples in the file.
    pub fn len(&self) -> usize {
        self.reader.len() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fills `out` from the stream and returns how many samples were read;
    /// fewer than `out.len()` only at the end of the file.
    pub fn read_block(&mut self, out: &mut [f32]) -> Result<usize> {
        let wav_err = |source| Error::Wav { path: self.path.clone(), source };
        let mut n = 0;
        match self.decoder {
            Decoder::Float => {
                for (slot, s) in out.iter_mut().zip(self.reader.samples::<f32>()) {
                    *slot = s.map_err(wav_err)?;
                    n += 1;
                }
            }
            Decoder::Int(scale) => {
                for (slot, s) in out.iter_mut().zip(self.reader.samples::<i32>()) {
                    *slot = s.map_err(wav_err)? as f32 * scale;
                    n += 1;
                }
            }
        }
        if let Some(i) = out[..n].iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("{}: non-finite sample in block at {i}", self.path.display())));
        }
        Ok(n)
    }
}

/// Incremental mono WAV writer. Call [`WavBlockWriter::finalize`] to
/// complete the header.
pub struct WavBlockWriter {
    writer: WavWriter<std::io::BufWriter<std::fs::File>>,
    encoding: WavEncoding,
    path: std::path::PathBuf,
}

impl WavBlockWriter {
    pub fn create(path: impl AsRef<Path>, sample_rate: u32, encoding: WavEncoding) -> Result<Self> {
        let path = path.as_ref();
        let (bits_per_sample, sample_format) = match encoding {
            WavEncoding::Pcm16 => (16, SampleFormat::Int),
            WavEncoding::Pcm24 => (24, SampleFormat::Int),
            WavEncoding::Float32 => (32, SampleFormat::Float),
        };
        let spec = WavSpec { channels: 1, sample_rate, bits_per_sample, sample_format };
        let writer = WavWriter::create(path, spec).map_err(|source| Error::Wav { path: path.to_path_buf(), source })?;
        Ok(Self { writer, encoding, path: path.to_path_buf() })
    }

    pub fn write_block(&mut self, samples: &[f32]) -> Result<()> {
        let wav_err = |source| Error::Wav { path: self.path.clone(), source };
        match self.encoding {
            WavEncoding::Float32 => {
                for &s in samples {
                    self.writer.write_sample(s).map_err(wav_err)?;
                }
            }
            WavEncoding::Pcm16 | WavEncoding::Pcm24 => {
                let full = (1i32 << (self.writer.spec().bits_per_sample - 1)) as f32;
                for &s in samples {
                    let v = (s * full).round().clamp(-full, full - 1.0) as i32;
                    self.writer.write_sample(v).map_err(wav_err)?;
                }
            }
        }
        Ok(())
    }

    pub fn finalize(self) -> Result<()> {
        let path = self.path;
        self.writer.finalize().map_err(|source| Error::Wav { path, source })
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let mut r = WavBlockReader::open(path)?;
    let mut samples = vec![0.0f32; r.len()];
    let n = r.read_block(&mut samples)?;
    samples.truncate(n);
    AudioBuffer::new(samples, r.sample_rate())
}

pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer, encoding: WavEncoding) -> Result<()> {
    let mut w = WavBlockWriter::create(path, audio.sample_rate, encoding)?;
    w.write_block(&audio.samples)?;
    w.finalize()
}

/// Reads a WAV file and insists on the engine's fixed 48 kHz rate.
pub fn read_wav_48k(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let audio = read_wav(path.as_ref())?;
    if audio.sample_rate != SAMPLE_RATE {
        return Err(Error::UnsupportedAudio(format!(
            "{} is sampled at {} Hz; resample to {SAMPLE_RATE} Hz first",
            path.as_ref().display(),
            audio.sample_rate
        )));
    }
    Ok(audio)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcm16_round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let samples: Vec<f32> = (0..500).map(|i| ((i as f32) * 0.05).sin() * 0.8).collect();
        let audio = AudioBuffer::new(samples.clone(), SAMPLE_RATE).unwrap();
        write_wav(&path, &audio, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate, SAMPLE_RATE);
        for (a, b) in samples.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn float_and_pcm24_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<f32> = (0..300).map(|i| ((i as f32) * 0.11).cos() * 0.5).collect();
        let audio = AudioBuffer::new(samples.clone(), SAMPLE_RATE).unwrap();

        let f = dir.path().join("f.wav");
        write_wav(&f, &audio, WavEncoding::Float32).unwrap();
        assert_eq!(read_wav(&f).unwrap().samples, samples);

        let p = dir.path().join("p.wav");
        write_wav(&p, &audio, WavEncoding::Pcm24).unwrap();
        for (a, b) in samples.iter().zip(&read_wav(&p).unwrap().samples) {
            assert!((a - b).abs() <= 1.0 / 8_388_608.0);
        }
    }

    #[test]
    fn stereo_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec =
            WavSpec { channels: 2, sample_rate: SAMPLE_RATE, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for _ in 0..20 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        let err = read_wav(&path).unwrap_err();
        assert!(matches!(err, Error::UnsupportedAudio(ref m) if m.contains("2 channels")), "{err}");
    }

    #[test]
    fn wrong_rate_rejected_by_strict_reader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("16k.wav");
        let audio = AudioBuffer::new(vec![0.0; 10], 16_000).unwrap();
        write_wav(&path, &audio, WavEncoding::Float32).unwrap();
        assert!(read_wav_48k(&path).is_err());
    }

    #[test]
    fn non_finite_samples_rejected() {
        assert!(AudioBuffer::new(vec![0.0, f32::NAN], SAMPLE_RATE).is_err());
        assert!(AudioBuffer::new(vec![0.0], 0).is_err());
    }
}
