use serde::{Deserialize, Serialize};

use super::{Result, SensorError};

pub const SENSOR_COUNT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizeConfig {
    pub min_range_mm: u32,
    pub max_range_mm: u32,
}

impl Default for QuantizeConfig {
    fn default() -> Self {
        Self {
            min_range_mm: 300,
            max_range_mm: 5000,
        }
    }
}

impl QuantizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_range_mm <= self.min_range_mm {
            return Err(SensorError::InvalidInput(format!(
                "max_range_mm {} must exceed min_range_mm {}",
                self.max_range_mm, self.min_range_mm
            )));
        }
        Ok(())
    }

    pub fn clamp(&self, range_mm: u32) -> u32 {
        range_mm.clamp(self.min_range_mm, self.max_range_mm)
    }
}

/// Maps a range to a proximity bucket, 1 nearest and 10 farthest.
pub fn quantize_mm_to_bucket(range_mm: u32, config: &QuantizeConfig) -> u8 {
    let c = u64::from(config.clamp(range_mm) - config.min_range_mm);
    let span = u64::from(config.max_range_mm - config.min_range_mm).max(1);
    (1 + 9 * c / span) as u8
}

/// One sensor's reading. The bucket is derived from the clamped range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorReading {
    singer_id: u8,
    range_mm: u32,
    bucket: u8,
    timestamp: u64,
}

impl SensorReading {
    pub fn new(singer_id: u8, range_mm: u32, timestamp: u64, config: &QuantizeConfig) -> Self {
        let range_mm = config.clamp(range_mm);
        Self {
            singer_id,
            range_mm,
            bucket: quantize_mm_to_bucket(range_mm, config),
            timestamp,
        }
    }

    pub fn singer_id(&self) -> u8 {
        self.singer_id
    }

    pub fn range_mm(&self) -> u32 {
        self.range_mm
    }

    pub fn bucket(&self) -> u8 {
        self.bucket
    }

    pub fn timestamp(&self) -> u64 {
        self.timestamp
    }
}

/// One reading per singer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorFrame {
    frame_seq: u64,
    readings: Vec<SensorReading>,
}

impl SensorFrame {
    /// Readings may come in any order; they are stored by singer id.
    pub fn new(frame_seq: u64, mut readings: Vec<SensorReading>) -> Result<Self> {
        readings.sort_by_key(|r| r.singer_id);
        let ids_ok = readings.len() == SENSOR_COUNT
            && readings
                .iter()
                .enumerate()
                .all(|(i, r)| usize::from(r.singer_id) == i);
        if !ids_ok {
            return Err(SensorError::InvalidInput(format!(
                "frame needs exactly one reading per singer 0..{SENSOR_COUNT}"
            )));
        }
        Ok(Self {
            frame_seq,
            readings,
        })
    }

    /// Every singer at the far limit.
    pub fn empty(frame_seq: u64, timestamp: u64, config: &QuantizeConfig) -> Self {
        Self {
            frame_seq,
            readings: (0..SENSOR_COUNT as u8)
                .map(|i| SensorReading::new(i, config.max_range_mm, timestamp, config))
                .collect(),
        }
    }

    pub fn frame_seq(&self) -> u64 {
        self.frame_seq
    }

    pub fn readings(&self) -> &[SensorReading] {
        &self.readings
    }

    pub fn reading(&self, singer: usize) -> &SensorReading {
        &self.readings[singer]
    }

    pub fn buckets(&self) -> [u8; SENSOR_COUNT] {
        std::array::from_fn(|i| self.readings[i].bucket)
    }

    pub fn ranges_mm(&self) -> [u32; SENSOR_COUNT] {
        std::array::from_fn(|i| self.readings[i].range_mm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundaries() {
        let c = QuantizeConfig::default();
        assert_eq!(quantize_mm_to_bucket(300, &c), 1);
        assert_eq!(quantize_mm_to_bucket(5000, &c), 10);
        assert_eq!(quantize_mm_to_bucket(2650, &c), 5);
        assert_eq!(quantize_mm_to_bucket(0, &c), 1);
        assert_eq!(quantize_mm_to_bucket(99_999, &c), 10);
    }

    #[test]
    fn full_table_is_monotone_and_surjective() {
        let c = QuantizeConfig::default();
        let mut widths = [0u32; 11];
        let mut prev = 1;
        for mm in c.min_range_mm..=c.max_range_mm {
            let b = quantize_mm_to_bucket(mm, &c);
            // float reference of the same formula
            let t = f64::from(mm - 300) / 4700.0;
            let expect = if mm == 5000 { 10 } else { 1 + (9.0 * t).floor() as u8 };
            assert_eq!(b, expect, "{mm}");
            assert!(b >= prev);
            prev = b;
            widths[b as usize] += 1;
        }
        // buckets 1..9 are each about 4700/9 mm wide; 10 is only the endpoint
        for w in &widths[1..10] {
            assert!((522..=523).contains(w), "{widths:?}");
        }
        assert_eq!(widths[10], 1);
    }

    #[test]
    fn frame_requires_all_singers() {
        let c = QuantizeConfig::default();
        let r: Vec<_> = (0..15).map(|i| SensorReading::new(i, 1000, 0, &c)).collect();
        assert!(SensorFrame::new(0, r).is_err());
    }

    proptest! {
        #[test]
        fn reading_bucket_is_derived(mm in 0u32..20_000, min in 0u32..2000, span in 1u32..8000) {
            let c = QuantizeConfig { min_range_mm: min, max_range_mm: min + span };
            let r = SensorReading::new(0, mm, 0, &c);
            prop_assert!(r.range_mm() >= c.min_range_mm && r.range_mm() <= c.max_range_mm);
            prop_assert_eq!(r.bucket(), quantize_mm_to_bucket(r.range_mm(), &c));
            prop_assert!((1..=10).contains(&r.bucket()));
        }
    }
}
