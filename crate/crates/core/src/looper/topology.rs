use serde::{Deserialize, Serialize};

use super::LoopConfig;
use crate::sensors::{SensorFrame, SENSOR_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopTopology {
    pub chosen_singer: Option<u8>,
    pub echo_delay_ms: f64,
    pub echo_gain_decay: f64,
}

impl LoopTopology {
    pub fn independent(config: &LoopConfig) -> Self {
        Self {
            chosen_singer: None,
            echo_delay_ms: config.echo_delay_ms,
            echo_gain_decay: config.echo_gain_decay,
        }
    }

    pub fn delay_samples(&self, distance: usize, sample_rate: u32) -> u64 {
        (distance as f64 * self.echo_delay_ms * f64::from(sample_rate) / 1000.0).round() as u64
    }

    pub fn gain(&self, distance: usize) -> f64 {
        self.echo_gain_decay.powi(distance as i32)
    }
}

/// Steps between two positions on the 16-singer ring.
pub fn ring_distance(a: usize, b: usize) -> usize {
    let d = a.abs_diff(b) % SENSOR_COUNT;
    d.min(SENSOR_COUNT - d)
}

/// Index of the smallest range; ties go to the lowest index.
pub fn nearest_singer<R: PartialOrd + Copy>(ranges: &[R]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in ranges.iter().enumerate() {
        if best.is_none_or(|b| *r < ranges[b]) {
            best = Some(i);
        }
    }
    best
}

/// Follows the performer's nearest singer with hysteresis.
#[derive(Debug, Clone)]
pub struct TopologyTracker {
    config: LoopConfig,
    current: Option<u8>,
    candidate: Option<u8>,
    streak: u32,
}

impl TopologyTracker {
    pub fn new(config: &LoopConfig) -> Self {
        Self {
            config: config.clone(),
            current: None,
            candidate: None,
            streak: 0,
        }
    }

    /// Nearest singer for one frame, `None` when every bucket is the far one.
    pub fn target(frame: &SensorFrame) -> Option<u8> {
        if frame.buckets().iter().all(|&b| b >= 10) {
            return None;
        }
        nearest_singer(&frame.ranges_mm()).map(|i| i as u8)
    }

    pub fn update(&mut self, frame: &SensorFrame) -> LoopTopology {
        let target = Self::target(frame);
        if target == self.current {
            self.candidate = None;
            self.streak = 0;
        } else {
            if target == self.candidate {
                self.streak += 1;
            } else {
                self.candidate = target;
                self.streak = 1;
            }
            if self.streak >= self.config.hold {
                self.current = target;
                self.candidate = None;
                self.streak = 0;
            }
        }
        self.topology()
    }

    pub fn topology(&self) -> LoopTopology {
        LoopTopology {
            chosen_singer: self.current,
            ..LoopTopology::independent(&self.config)
        }
    }

    pub fn set_echo(&mut self, delay_ms: f64, decay: f64) {
        self.config.echo_delay_ms = delay_ms;
        self.config.echo_gain_decay = decay;
    }

    pub fn reset(&mut self) {
        self.current = None;
        self.candidate = None;
        self.streak = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensors::{QuantizeConfig, SensorReading};
    use proptest::prelude::*;

    fn frame(ranges: [u32; 16]) -> SensorFrame {
        let q = QuantizeConfig::default();
        SensorFrame::new(0, (0..16).map(|i| SensorReading::new(i as u8, ranges[i], 0, &q)).collect())
            .unwrap()
    }

    #[test]
    fn ring_distances() {
        assert_eq!(ring_distance(7, 8), 1);
        assert_eq!(ring_distance(0, 15), 1);
        assert_eq!(ring_distance(7, 15), 8);
        assert_eq!(ring_distance(3, 3), 0);
    }

    #[test]
    fn nearest_with_tie() {
        let mut r = [4000u32; 16];
        r[9] = 800;
        r[4] = 800;
        assert_eq!(TopologyTracker::target(&frame(r)), Some(4));
        assert_eq!(TopologyTracker::target(&frame([5000; 16])), None);
    }

    #[test]
    fn hold_delays_switch() {
        let cfg = LoopConfig { hold: 3, ..Default::default() };
        let mut t = TopologyTracker::new(&cfg);
        let mut r = [5000u32; 16];
        r[7] = 500;
        let f = frame(r);
        assert_eq!(t.update(&f).chosen_singer, None);
        assert_eq!(t.update(&f).chosen_singer, None);
        assert_eq!(t.update(&f).chosen_singer, Some(7));
        // a one-cycle blip does not move it
        let mut r2 = r;
        r2[2] = 400;
        assert_eq!(t.update(&frame(r2)).chosen_singer, Some(7));
        assert_eq!(t.update(&f).chosen_singer, Some(7));
    }

    #[test]
    fn echo_table() {
        let topo = LoopTopology::independent(&LoopConfig::default());
        for d in 0..=8 {
            assert_eq!(topo.delay_samples(d, 48_000), d as u64 * 5760);
            assert!((topo.gain(d) - 0.8f64.powi(d as i32)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn argmin_scale_invariant(ranges in proptest::collection::vec(1u32..100_000, 16), k in 1u32..50) {
            let scaled: Vec<u64> = ranges.iter().map(|&r| u64::from(r) * u64::from(k)).collect();
            let as_f: Vec<f64> = ranges.iter().map(|&r| f64::from(r) * 0.37).collect();
            let base = nearest_singer(&ranges);
            prop_assert_eq!(base, nearest_singer(&scaled));
            prop_assert_eq!(base, nearest_singer(&as_f));
        }

        #[test]
        fn tracker_settles_on_argmin(ranges in proptest::collection::vec(300u32..5000, 16), hold in 1u32..5) {
            let mut r = [0u32; 16];
            r.copy_from_slice(&ranges);
            let cfg = LoopConfig { hold, ..Default::default() };
            let mut t = TopologyTracker::new(&cfg);
            let f = frame(r);
            for _ in 0..hold {
                t.update(&f);
            }
            prop_assert_eq!(t.topology().chosen_singer, TopologyTracker::target(&f));
        }
    }
}
