use serde::{Deserialize, Serialize};

use super::{EnsembleError, Result};

/// Voice intensity tiers, ordered from quietest to fullest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProximityTier {
    Whisper,
    Falsetto,
    Full,
}

/// Bucket thresholds and gains for proximity modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProximityTiers {
    /// Lowest bucket still sung in full voice.
    pub full_min_bucket: u8,
    /// Lowest bucket sung in falsetto; anything nearer whispers.
    pub falsetto_min_bucket: u8,
    pub full_gain: f64,
    pub falsetto_gain: f64,
    pub whisper_gain: f64,
}

impl Default for ProximityTiers {
    fn default() -> Self {
        Self {
            full_min_bucket: 8,
            falsetto_min_bucket: 4,
            full_gain: 1.0,
            falsetto_gain: 0.7,
            whisper_gain: 0.4,
        }
    }
}

impl ProximityTiers {
    pub fn validate(&self) -> Result<()> {
        let p = "ensemble.proximity";
        if !(1..=10).contains(&self.full_min_bucket) || !(1..=10).contains(&self.falsetto_min_bucket) {
            return Err(EnsembleError::at(p, "bucket thresholds must be in 1..=10"));
        }
        if self.falsetto_min_bucket > self.full_min_bucket {
            return Err(EnsembleError::at(
                format!("{p}.falsetto_min_bucket"),
                "must not exceed full_min_bucket",
            ));
        }
        for (name, g) in [
            ("full_gain", self.full_gain),
            ("falsetto_gain", self.falsetto_gain),
            ("whisper_gain", self.whisper_gain),
        ] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(EnsembleError::at(format!("{p}.{name}"), "gain must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn tier(&self, bucket: u8) -> ProximityTier {
        if bucket >= self.full_min_bucket {
            ProximityTier::Full
        } else if bucket >= self.falsetto_min_bucket {
            ProximityTier::Falsetto
        } else {
            ProximityTier::Whisper
        }
    }

    pub fn gain(&self, tier: ProximityTier) -> f64 {
        match tier {
            ProximityTier::Full => self.full_gain,
            ProximityTier::Falsetto => self.falsetto_gain,
            ProximityTier::Whisper => self.whisper_gain,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_tiers() {
        let t = ProximityTiers::default();
        assert_eq!((t.tier(10), t.gain(t.tier(10))), (ProximityTier::Full, 1.0));
        assert_eq!((t.tier(5), t.gain(t.tier(5))), (ProximityTier::Falsetto, 0.7));
        assert_eq!((t.tier(1), t.gain(t.tier(1))), (ProximityTier::Whisper, 0.4));
        assert_eq!(t.tier(8), ProximityTier::Full);
        assert_eq!(t.tier(7), ProximityTier::Falsetto);
        assert_eq!(t.tier(4), ProximityTier::Falsetto);
        assert_eq!(t.tier(3), ProximityTier::Whisper);
    }

    proptest! {
        #[test]
        fn accepted_configs_are_monotone(full in 0u8..12, fals in 0u8..12) {
            let t = ProximityTiers { full_min_bucket: full, falsetto_min_bucket: fals, ..Default::default() };
            if t.validate().is_ok() {
                for b in 1..10u8 {
                    prop_assert!(t.tier(b) <= t.tier(b + 1));
                }
            }
        }
    }
}
