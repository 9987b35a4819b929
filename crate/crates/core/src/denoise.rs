use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::dsp::{Stft, WindowSpec};
use crate::error::{shape_err, Error, Result};
use crate::model::{Model, StreamState};

/// Block-streaming denoiser: `hop` samples in, `hop` samples out, with a
/// fixed delay of one hop. Memory does not grow with stream length.
pub struct Denoiser<'m> {
    model: &'m Model,
    stft: Stft,
    state: StreamState,
    /// Last `fft_size` input samples, oldest first.
    recent: Vec<f32>,
}

impl<'m> Denoiser<'m> {
    pub fn new(model: &'m Model) -> Self {
        Self::with_window(model, WindowSpec::default())
    }

    pub fn with_window(model: &'m Model, window: WindowSpec) -> Self {
        let recent = vec![0.0; window.fft_size()];
        let state = model.new_state(&window);
        Self { model, stft: Stft::new(window), state, recent }
    }

    pub fn hop(&self) -> usize {
        self.stft.window().hop()
    }

    /// Samples between an input sample and its processed counterpart.
    pub fn latency_samples(&self) -> usize {
        self.stft.window().fft_size() - self.hop()
    }

    pub fn frames_processed(&self) -> u64 {
        self.state.frames_processed()
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state.reset();
        self.recent.fill(0.0);
    }

    /// Consumes exactly one hop of input and writes one hop of output.
    pub fn process_hop(&mut self, input: &[f32], output: &mut [f32]) -> Result<()> {
        let hop = self.hop();
        if input.len() != hop {
            return Err(shape_err("denoiser input block", hop, input.len()));
        }
        self.recent.copy_within(hop.., 0);
        let n = self.recent.len();
        self.recent[n - hop..].copy_from_slice(input);
        let frame = self.stft.analyze_frame(&self.recent)?;
        let step = self.model.step(&frame, &mut self.state)?;
        self.stft.synthesize_frame(&step.denoised, self.state.ola_mut(), output)
    }

    /// Streams a signal through the denoiser. `read` fills a block and
    /// returns how many samples it wrote, fewer than a hop only at the end
    /// of the input. `write` receives output aligned with the input (the
    /// first `latency_samples` are dropped and zero blocks flush the tail),
    /// exactly as many samples as were read. Returns that count.
    pub fn process_stream(
        &mut self,
        mut read: impl FnMut(&mut [f32]) -> Result<usize>,
        mut write: impl FnMut(&[f32]) -> Result<()>,
    ) -> Result<usize> {
        let hop = self.hop();
        let mut skip = self.latency_samples();
        let mut block_in = vec![0.0f32; hop];
        let mut block_out = vec![0.0f32; hop];
        let (mut consumed, mut written, mut eof) = (0usize, 0usize, false);
        while !(eof && written >= consumed) {
            block_in.fill(0.0);
            if !eof {
                let n = read(&mut block_in)?;
                consumed += n;
                eof = n < hop;
            }
            self.process_hop(&block_in, &mut block_out)?;
            let start = skip.min(hop);
            skip -= start;
            let take = (hop - start).min(consumed - written);
            write(&block_out[start..start + take])?;
            written += take;
        }
        Ok(written)
    }

    /// Denoises a whole in-memory signal; output has the input's length.
    pub fn process(&mut self, audio: &AudioBuffer) -> Result<AudioBuffer> {
        if audio.sample_rate != SAMPLE_RATE {
            return Err(Error::UnsupportedAudio(format!("expected {SAMPLE_RATE} Hz, got {} Hz", audio.sample_rate)));
        }
        let mut pos = 0;
        let mut out = Vec::with_capacity(audio.len());
        self.process_stream(
            |block| {
                let n = block.len().min(audio.len() - pos);
                block[..n].copy_from_slice(&audio.samples[pos..pos + n]);
                pos += n;
                Ok(n)
            },
            |y| {
                out.extend_from_slice(y);
                Ok(())
            },
        )?;
        AudioBuffer::new(out, audio.sample_rate)
    }
}
