//! Live looping: recording performer layers, per-singer segment choice,
//! the proximity-driven echo topology and the per-channel loop bus.

mod playback;
mod recorder;
mod segment;
mod topology;

use serde::{Deserialize, Serialize};

pub use playback::{loop_contribution, segment_index, LayerInfo, LoopSession, LoopState, TopologyChange};
pub use recorder::{CueDetector, LoopLayer, LoopRecorder};
pub use segment::{choose_segments, SegmentChoice};
pub use topology::{nearest_singer, ring_distance, LoopTopology, TopologyTracker};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LoopError {
    #[error("loop is not armed")]
    NotArmed,
    #[error("loop is already armed")]
    AlreadyArmed,
    #[error("recording is empty, no layer committed")]
    ZeroLength,
    #[error("layer memory would reach {bytes} bytes, limit is {limit}")]
    Watermark { bytes: usize, limit: usize },
    #[error("invalid loop config: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = LoopError> = std::result::Result<T, E>;

/// Sustained-pitch cue that toggles recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SungCueConfig {
    pub enabled: bool,
    pub min_pitch_hz: f64,
    pub sustain_s: f64,
}

impl Default for SungCueConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            min_pitch_hz: 880.0,
            sustain_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    /// Shortest segment as a fraction of the layer.
    pub min_fraction: f64,
    pub max_fraction: f64,
    pub echo_delay_ms: f64,
    pub echo_gain_decay: f64,
    /// Sensor cycles a new nearest singer has to persist.
    pub hold: u32,
    pub memory_watermark_bytes: usize,
    pub cue: SungCueConfig,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            min_fraction: 0.25,
            max_fraction: 1.0,
            echo_delay_ms: 120.0,
            echo_gain_decay: 0.8,
            hold: 2,
            memory_watermark_bytes: 512 * 1024 * 1024,
            cue: SungCueConfig::default(),
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LoopError::InvalidConfig(m.into()));
        if !(self.min_fraction > 0.0 && self.min_fraction <= 1.0) {
            return bad("min_fraction must be in (0, 1]");
        }
        if !(self.max_fraction >= self.min_fraction && self.max_fraction <= 1.0) {
            return bad("max_fraction must be in [min_fraction, 1]");
        }
        if !(self.echo_delay_ms >= 0.0 && self.echo_delay_ms.is_finite()) {
            return bad("echo_delay_ms must be non-negative");
        }
        if !(self.echo_gain_decay > 0.0 && self.echo_gain_decay <= 1.0) {
            return bad("echo_gain_decay must be in (0, 1]");
        }
        if self.hold == 0 {
            return bad("hold must be at least 1");
        }
        if self.cue.enabled && !(self.cue.sustain_s > 0.0 && self.cue.min_pitch_hz > 0.0) {
            return bad("cue needs a positive pitch and sustain");
        }
        Ok(())
    }
}
