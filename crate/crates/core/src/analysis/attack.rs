use serde::{Deserialize, Serialize};

use super::{AnalysisError, Result};
use crate::scalar::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackClass {
    ShortStrong,
    LongSoft,
    None,
}

impl AttackClass {
    /// Ordering used when summarizing a phrase: the strongest attack wins.
    pub fn strength(self) -> u8 {
        match self {
            AttackClass::ShortStrong => 2,
            AttackClass::LongSoft => 1,
            AttackClass::None => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub window_hops: usize,
    pub strong_rise_db: f64,
    pub soft_rise_db: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            band_low_hz: 2000.0,
            band_high_hz: 6000.0,
            window_hops: 8,
            strong_rise_db: 12.0,
            soft_rise_db: 4.0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.band_low_hz > 0.0 && self.band_low_hz < self.band_high_hz) {
            return Err(AnalysisError::InvalidInput(
                "attack band must satisfy 0 < low < high".into(),
            ));
        }
        if self.window_hops == 0 {
            return Err(AnalysisError::InvalidInput("attack window must be at least one hop".into()));
        }
        if !(self.strong_rise_db > self.soft_rise_db && self.soft_rise_db > 0.0) {
            return Err(AnalysisError::InvalidInput(
                "attack thresholds must satisfy strong > soft > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Classifies the most recent `window_hops` band levels by their dynamic range.
pub fn classify_attack<T: Sample>(history_db: &[T], config: &AttackConfig) -> Result<AttackClass> {
    if history_db.len() < config.window_hops || config.window_hops == 0 {
        return Err(AnalysisError::InvalidInput(format!(
            "attack history has {} hops, window needs {}",
            history_db.len(),
            config.window_hops
        )));
    }
    let window = &history_db[history_db.len() - config.window_hops..];
    let (lo, hi) = window
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let rise = (hi - lo).as_f64();
    Ok(if rise >= config.strong_rise_db {
        AttackClass::ShortStrong
    } else if rise >= config.soft_rise_db {
        AttackClass::LongSoft
    } else {
        AttackClass::None
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // independent reference: sort the window and compare the extremes
    fn reference(history: &[f64], cfg: &AttackConfig) -> AttackClass {
        let mut w: Vec<f64> = history[history.len() - cfg.window_hops..].to_vec();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rise = w[w.len() - 1] - w[0];
        if rise >= cfg.strong_rise_db {
            AttackClass::ShortStrong
        } else if rise >= cfg.soft_rise_db {
            AttackClass::LongSoft
        } else {
            AttackClass::None
        }
    }

    #[test]
    fn rising_history_is_strong() {
        let cfg = AttackConfig::default();
        let h: Vec<f64> = (0..8).map(|i| i as f64 * 18.0 / 7.0).collect();
        assert_eq!(classify_attack(&h, &cfg).unwrap(), AttackClass::ShortStrong);
        assert_eq!(reference(&h, &cfg), AttackClass::ShortStrong);
    }

    #[test]
    fn flat_history_is_none() {
        let cfg = AttackConfig::default();
        assert_eq!(classify_attack(&[-30.0f32; 8], &cfg).unwrap(), AttackClass::None);
    }

    #[test]
    fn soft_boundary_is_inclusive() {
        let cfg = AttackConfig::default();
        let mut h = vec![-40.0f64; 8];
        h[5] = -40.0 + cfg.soft_rise_db;
        assert_eq!(classify_attack(&h, &cfg).unwrap(), AttackClass::LongSoft);
    }

    #[test]
    fn short_history_is_an_error() {
        let cfg = AttackConfig::default();
        assert!(classify_attack(&[0.0f64; 3], &cfg).is_err());
    }

    #[test]
    fn agrees_with_reference_on_random_histories() {
        use rand::{Rng, SeedableRng};
        let cfg = AttackConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let len = rng.random_range(8..20);
            let h: Vec<f64> = (0..len).map(|_| rng.random_range(-60.0..0.0) * 0.4).collect();
            assert_eq!(classify_attack(&h, &cfg).unwrap(), reference(&h, &cfg));
        }
    }

    proptest! {
        #[test]
        fn classification_matches_reference(h in proptest::collection::vec(-120.0f64..0.0, 8..32)) {
            let cfg = AttackConfig::default();
            prop_assert_eq!(classify_attack(&h, &cfg).unwrap(), reference(&h, &cfg));
        }
    }
}
