use serde::{Deserialize, Serialize};

use super::{
    classify_attack, gate_is_singing, AnalysisError, AttackClass, AttackConfig, AudioFrame,
    FrameAnalyzer, GateObservation, GateProfile, PitchConfig, Result, VocalFeatures,
};
use crate::scalar::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub sample_rate_hz: u32,
    pub window: usize,
    pub hop: usize,
    pub pitch: PitchConfig,
    pub attack: AttackConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 48_000,
            window: 2048,
            hop: 512,
            pitch: PitchConfig::default(),
            attack: AttackConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 || self.hop > self.window {
            return Err(AnalysisError::InvalidInput(
                "hop must be in 1..=window".into(),
            ));
        }
        self.attack.validate()
    }
}

/// Turns a mono performer stream into one [`VocalFeatures`] per hop.
///
/// Features are emitted once a full window is available, so a stream of
/// `n` samples yields `(n - window) / hop + 1` records. Each record is
/// stamped with the window centre, which trails the newest sample by
/// `window / 2` (two hops at the default sizes).
pub struct StreamAnalyzer<T: Sample> {
    config: AnalysisConfig,
    profile: GateProfile,
    frame: FrameAnalyzer<T>,
    ring: Vec<T>,
    ring_pos: usize,
    linear: Vec<T>,
    received: u64,
    origin: Option<u64>,
    stream_rate: Option<u32>,
    attack_ring: Vec<f64>,
    attack_linear: Vec<f64>,
    attack_count: usize,
}

impl<T: Sample> StreamAnalyzer<T> {
    pub fn new(config: AnalysisConfig, profile: GateProfile) -> Result<Self> {
        config.validate()?;
        profile.validate()?;
        if profile.sample_rate_hz != config.sample_rate_hz {
            return Err(AnalysisError::InvalidInput(format!(
                "gate profile calibrated at {} Hz, analysis runs at {} Hz",
                profile.sample_rate_hz, config.sample_rate_hz
            )));
        }
        let frame = FrameAnalyzer::new(
            config.window,
            config.sample_rate_hz,
            config.pitch,
            &config.attack,
            &profile.band_edges_hz,
        )?;
        let hops = config.attack.window_hops;
        Ok(Self {
            ring: vec![T::zero(); config.window],
            linear: vec![T::zero(); config.window],
            ring_pos: 0,
            received: 0,
            origin: None,
            stream_rate: None,
            attack_ring: vec![0.0; hops],
            attack_linear: vec![0.0; hops],
            attack_count: 0,
            config,
            profile,
            frame,
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn profile(&self) -> &GateProfile {
        &self.profile
    }

    /// Drops all buffered audio and history.
    pub fn reset(&mut self) {
        self.ring.iter_mut().for_each(|s| *s = T::zero());
        self.ring_pos = 0;
        self.received = 0;
        self.origin = None;
        self.stream_rate = None;
        self.attack_count = 0;
    }

    /// Pushes a frame, checking it continues the stream's sample rate.
    pub fn push_frame(
        &mut self,
        frame: &AudioFrame<T>,
        sink: impl FnMut(VocalFeatures),
    ) -> Result<()> {
        let rate = frame.sample_rate_hz();
        if rate != self.config.sample_rate_hz {
            let from = self.stream_rate.unwrap_or(self.config.sample_rate_hz);
            self.reset();
            return Err(AnalysisError::SampleRateChanged { from, to: rate });
        }
        self.stream_rate = Some(rate);
        if self.origin.is_none() {
            self.origin = Some(frame.start_time());
        }
        self.push_samples(frame.samples(), sink)
    }

    /// Pushes raw samples at the configured rate; chunk sizes are arbitrary.
    pub fn push_samples(
        &mut self,
        samples: &[T],
        mut sink: impl FnMut(VocalFeatures),
    ) -> Result<()> {
        let window = self.config.window as u64;
        let hop = self.config.hop as u64;
        for &s in samples {
            self.ring[self.ring_pos] = s;
            self.ring_pos = (self.ring_pos + 1) % self.ring.len();
            self.received += 1;
            if self.received >= window && (self.received - window) % hop == 0 {
                let start = self.received - window;
                let features = self.analyze_current(start)?;
                sink(features);
            }
        }
        Ok(())
    }

    fn analyze_current(&mut self, window_start: u64) -> Result<VocalFeatures> {
        let n = self.ring.len();
        let (tail, head) = self.ring.split_at(self.ring_pos);
        self.linear[..n - self.ring_pos].copy_from_slice(head);
        self.linear[n - self.ring_pos..].copy_from_slice(tail);

        let obs = self.frame.analyze(&self.linear)?;
        let is_singing = gate_is_singing(
            &GateObservation {
                pitch_hz: obs.pitch_hz,
                pitch_confidence: obs.pitch_confidence,
                volume_dbfs: obs.volume_dbfs,
                band_energies: obs.band_energies,
            },
            &self.profile,
        );
        let (pitch_hz, pitch_confidence, volume_dbfs) =
            (obs.pitch_hz, obs.pitch_confidence, obs.volume_dbfs);

        let hops = self.attack_ring.len();
        self.attack_ring[self.attack_count % hops] = obs.attack_band_db;
        self.attack_count += 1;
        let attack = if self.attack_count >= hops {
            let oldest = self.attack_count % hops;
            for i in 0..hops {
                self.attack_linear[i] = self.attack_ring[(oldest + i) % hops];
            }
            classify_attack(&self.attack_linear, &self.config.attack)?
        } else {
            AttackClass::None
        };

        Ok(VocalFeatures {
            pitch_hz,
            pitch_confidence,
            volume_dbfs,
            attack,
            is_singing,
            timestamp: self.origin.unwrap_or(0) + window_start + (self.config.window / 2) as u64,
        })
    }
}
