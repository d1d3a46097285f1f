use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LoopConfig, LoopError, LoopLayer, Result};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::sensors::SENSOR_COUNT;

/// The part of a layer one singer plays back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentChoice {
    pub singer_id: u8,
    pub layer_id: u32,
    pub start: u64,
    pub length: u64,
    pub seed: u64,
}

impl SegmentChoice {
    pub fn end(&self) -> u64 {
        self.start + self.length
    }
}

/// Draws each singer's segment: a length uniform over the allowed range,
/// then a start uniform over the positions where it fits.
pub fn choose_segments(
    layer: &LoopLayer,
    singer_seeds: &[u64; SENSOR_COUNT],
    config: &LoopConfig,
) -> Result<[SegmentChoice; SENSOR_COUNT]> {
    if config.min_fraction > 1.0 || config.min_fraction > config.max_fraction {
        return Err(LoopError::InvalidConfig(format!(
            "segment range {}..{} is infeasible",
            config.min_fraction, config.max_fraction
        )));
    }
    let d = layer.duration();
    if d == 0 {
        return Err(LoopError::ZeroLength);
    }
    let min_len = ((config.min_fraction * d as f64).ceil() as u64).clamp(1, d);
    let max_len = ((config.max_fraction * d as f64).floor() as u64).clamp(min_len, d);
    Ok(std::array::from_fn(|i| {
        let seed = derive_seed(singer_seeds[i], stream::SEGMENT ^ (u64::from(layer.layer_id) << 8));
        let mut rng = rng_from_seed(seed);
        let length = rng.random_range(min_len..=max_len);
        let start = rng.random_range(0..=d - length);
        SegmentChoice {
            singer_id: i as u8,
            layer_id: layer.layer_id,
            start,
            length,
            seed,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn layer(n: usize) -> LoopLayer {
        LoopLayer {
            layer_id: 3,
            sample_rate: 48_000,
            audio: Arc::from(vec![0.0f32; n]),
            record_start: 0,
            commit_tick: 0,
        }
    }

    #[test]
    fn forced_full_layer() {
        let cfg = LoopConfig { min_fraction: 1.0, max_fraction: 1.0, ..Default::default() };
        for c in choose_segments(&layer(1000), &[7; 16], &cfg).unwrap() {
            assert_eq!((c.start, c.length), (0, 1000));
        }
    }

    #[test]
    fn infeasible_constraints() {
        let cfg = LoopConfig { min_fraction: 1.5, max_fraction: 2.0, ..Default::default() };
        assert!(matches!(
            choose_segments(&layer(1000), &[7; 16], &cfg),
            Err(LoopError::InvalidConfig(_))
        ));
    }

    #[test]
    fn deterministic_and_bounded() {
        let seeds: [u64; 16] = std::array::from_fn(|i| i as u64 * 31);
        let cfg = LoopConfig::default();
        let a = choose_segments(&layer(192_000), &seeds, &cfg).unwrap();
        assert_eq!(a, choose_segments(&layer(192_000), &seeds, &cfg).unwrap());
        for c in a {
            assert!(c.length >= 48_000 && c.end() <= 192_000);
        }
        let distinct: std::collections::BTreeSet<_> = a.iter().map(|c| (c.start, c.length)).collect();
        assert!(distinct.len() > 1);
    }
}
