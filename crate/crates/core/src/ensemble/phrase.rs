use serde::{Deserialize, Serialize};

use crate::analysis::{AttackClass, VocalFeatures};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhraseConfig {
    /// Consecutive ungated hops that end a phrase.
    pub offset_hops: u32,
}

impl Default for PhraseConfig {
    fn default() -> Self {
        Self { offset_hops: 8 }
    }
}

/// A completed sung phrase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseSummary {
    pub seq: u64,
    /// Timestamp of the first gated hop.
    pub onset: u64,
    /// Timestamp of the hop that closed the phrase.
    pub offset: u64,
    pub pitch_hz: f64,
    pub length_s: f64,
    pub volume_dbfs: f64,
    pub attack: AttackClass,
    pub voiced_hops: usize,
}

/// Splits the gated feature stream into phrases.
///
/// A phrase starts at the first gated hop and ends after `offset_hops`
/// consecutive ungated hops. Its pitch is the median pitch of its gated hops
/// and its length runs from the first to the last gated hop plus one hop.
#[derive(Debug, Clone)]
pub struct PhraseTracker {
    config: PhraseConfig,
    hop: u64,
    sample_rate: f64,
    next_seq: u64,
    first: Option<u64>,
    last: u64,
    gap: u32,
    pitches: Vec<f64>,
    volume_sum: f64,
    attack: AttackClass,
    attack_hops: u32,
}

impl PhraseTracker {
    pub fn new(config: PhraseConfig, hop: usize, sample_rate: u32) -> Self {
        Self {
            config,
            hop: hop as u64,
            sample_rate: f64::from(sample_rate),
            next_seq: 0,
            first: None,
            last: 0,
            gap: 0,
            pitches: Vec::with_capacity(1024),
            volume_sum: 0.0,
            attack: AttackClass::None,
            attack_hops: 0,
        }
    }

    pub fn in_phrase(&self) -> bool {
        self.first.is_some()
    }

    pub fn reset(&mut self) {
        self.first = None;
        self.gap = 0;
        self.pitches.clear();
        self.volume_sum = 0.0;
        self.attack = AttackClass::None;
        self.attack_hops = 0;
    }

    pub fn push(&mut self, f: &VocalFeatures) -> Option<PhraseSummary> {
        let gated = f.is_singing && f.pitch_hz.is_some();
        if gated {
            if self.first.is_none() {
                self.first = Some(f.timestamp);
            }
            self.last = f.timestamp;
            self.gap = 0;
            self.pitches.push(f.pitch_hz.unwrap_or_default());
            self.volume_sum += f.volume_dbfs;
        }
        if self.first.is_some() {
            // strongest attack seen near the onset
            if self.attack_hops < 8 {
                self.attack_hops += 1;
                if f.attack.strength() > self.attack.strength() {
                    self.attack = f.attack;
                }
            }
            if !gated {
                self.gap += 1;
                if self.gap >= self.config.offset_hops {
                    return Some(self.finish(f.timestamp));
                }
            }
        }
        None
    }

    fn finish(&mut self, offset: u64) -> PhraseSummary {
        let onset = self.first.unwrap_or(offset);
        self.pitches.sort_by(f64::total_cmp);
        let n = self.pitches.len();
        let pitch = if n % 2 == 1 {
            self.pitches[n / 2]
        } else {
            0.5 * (self.pitches[n / 2 - 1] + self.pitches[n / 2])
        };
        let summary = PhraseSummary {
            seq: self.next_seq,
            onset,
            offset,
            pitch_hz: pitch,
            length_s: (self.last - onset + self.hop) as f64 / self.sample_rate,
            volume_dbfs: self.volume_sum / n as f64,
            attack: self.attack,
            voiced_hops: n,
        };
        self.next_seq += 1;
        self.reset();
        summary
    }
}
