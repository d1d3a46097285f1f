use std::sync::Arc;

use super::{LoopConfig, LoopError, Result, SungCueConfig};
use crate::analysis::VocalFeatures;
use crate::scalar::Sample;

/// A committed recording. The audio never changes after commit.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopLayer {
    pub layer_id: u32,
    pub sample_rate: u32,
    pub audio: Arc<[f32]>,
    /// Engine tick of the first recorded sample.
    pub record_start: u64,
    /// Engine tick at which playback of the layer begins.
    pub commit_tick: u64,
}

impl LoopLayer {
    pub fn duration(&self) -> u64 {
        self.audio.len() as u64
    }

    pub fn bytes(&self) -> usize {
        self.audio.len() * std::mem::size_of::<f32>()
    }
}

/// Captures performer audio between arm and disarm.
///
/// Layers are never evicted. Once the committed layers reach the memory
/// watermark, further recordings are refused with a warning.
#[derive(Debug)]
pub struct LoopRecorder {
    sample_rate: u32,
    limit: usize,
    armed_at: Option<u64>,
    buffer: Vec<f32>,
    overflow: bool,
    committed_bytes: usize,
    next_id: u32,
}

impl LoopRecorder {
    pub fn new(config: &LoopConfig, sample_rate: u32) -> Self {
        Self {
            sample_rate,
            limit: config.memory_watermark_bytes,
            armed_at: None,
            buffer: Vec::new(),
            overflow: false,
            committed_bytes: 0,
            next_id: 0,
        }
    }

    pub fn is_armed(&self) -> bool {
        self.armed_at.is_some()
    }

    pub fn committed_bytes(&self) -> usize {
        self.committed_bytes
    }

    pub fn arm(&mut self, tick: u64) -> Result<()> {
        if self.armed_at.is_some() {
            return Err(LoopError::AlreadyArmed);
        }
        if self.committed_bytes >= self.limit {
            log::warn!("loop memory watermark reached, not recording");
            return Err(LoopError::Watermark {
                bytes: self.committed_bytes,
                limit: self.limit,
            });
        }
        self.armed_at = Some(tick);
        self.buffer.clear();
        // room for half a minute up front keeps the audio path off the allocator
        let room = (self.limit - self.committed_bytes) / std::mem::size_of::<f32>();
        self.buffer.reserve((self.sample_rate as usize * 30).min(room));
        self.overflow = false;
        Ok(())
    }

    pub fn push<T: Sample>(&mut self, samples: &[T]) {
        if self.armed_at.is_none() || self.overflow {
            return;
        }
        let room = (self.limit - self.committed_bytes) / std::mem::size_of::<f32>();
        let take = samples.len().min(room.saturating_sub(self.buffer.len()));
        self.buffer
            .extend(samples[..take].iter().map(|s| s.as_f64() as f32));
        if take < samples.len() {
            log::warn!("loop memory watermark reached while recording");
            self.overflow = true;
        }
    }

    /// Ends the recording and commits it as a layer starting at `tick`.
    pub fn disarm(&mut self, tick: u64) -> Result<LoopLayer> {
        let start = self.armed_at.take().ok_or(LoopError::NotArmed)?;
        let audio = std::mem::take(&mut self.buffer);
        if self.overflow {
            return Err(LoopError::Watermark {
                bytes: self.committed_bytes + audio.len() * std::mem::size_of::<f32>(),
                limit: self.limit,
            });
        }
        if audio.is_empty() {
            return Err(LoopError::ZeroLength);
        }
        let layer = LoopLayer {
            layer_id: self.next_id,
            sample_rate: self.sample_rate,
            audio: Arc::from(audio),
            record_start: start,
            commit_tick: tick,
        };
        self.next_id += 1;
        self.committed_bytes += layer.bytes();
        Ok(layer)
    }

    /// Forgets all committed layers, keeping layer ids unique.
    pub fn release_all(&mut self) {
        self.committed_bytes = 0;
    }
}

/// Fires once per run of sustained high pitch.
#[derive(Debug, Clone)]
pub struct CueDetector {
    config: SungCueConfig,
    needed_hops: u64,
    run: u64,
    fired: bool,
}

impl CueDetector {
    pub fn new(config: SungCueConfig, hop: usize, sample_rate: u32) -> Self {
        let needed = (config.sustain_s * f64::from(sample_rate) / hop as f64).ceil() as u64;
        Self {
            config,
            needed_hops: needed.max(1),
            run: 0,
            fired: false,
        }
    }

    pub fn push(&mut self, f: &VocalFeatures) -> bool {
        if !self.config.enabled {
            return false;
        }
        let high = f.is_singing && f.pitch_hz.is_some_and(|p| p >= self.config.min_pitch_hz);
        if !high {
            self.run = 0;
            self.fired = false;
            return false;
        }
        self.run += 1;
        if self.run >= self.needed_hops && !self.fired {
            self.fired = true;
            return true;
        }
        false
    }
}
