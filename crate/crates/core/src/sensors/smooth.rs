use serde::{Deserialize, Serialize};

use super::{quantize_mm_to_bucket, QuantizeConfig, SensorFrame, SensorReading, SENSOR_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    /// Median filter length in frames; 1 disables it.
    pub median_window: usize,
    /// Frames a new bucket must persist before it is accepted; 1 accepts at once.
    pub hold_ticks: u32,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            median_window: 3,
            hold_ticks: 2,
        }
    }
}

#[derive(Debug, Clone)]
struct Channel {
    history: Vec<u32>,
    pos: usize,
    filled: usize,
    accepted: Option<u32>,
    pending: Option<(u8, u32)>,
}

/// Per-singer median filter followed by bucket hysteresis.
///
/// While a bucket change is pending the previous accepted range is repeated,
/// so each output reading still satisfies `bucket = quantize(range)`.
#[derive(Debug, Clone)]
pub struct ReadingSmoother {
    config: SmoothingConfig,
    quantize: QuantizeConfig,
    channels: Vec<Channel>,
    scratch: Vec<u32>,
}

impl ReadingSmoother {
    pub fn new(config: SmoothingConfig, quantize: QuantizeConfig) -> Self {
        let window = config.median_window.max(1);
        Self {
            config,
            quantize,
            channels: vec![
                Channel {
                    history: vec![0; window],
                    pos: 0,
                    filled: 0,
                    accepted: None,
                    pending: None,
                };
                SENSOR_COUNT
            ],
            scratch: Vec::with_capacity(window),
        }
    }

    pub fn process(&mut self, frame: &SensorFrame) -> SensorFrame {
        let hold = self.config.hold_ticks.max(1);
        let readings = frame
            .readings()
            .iter()
            .map(|r| {
                let ch = &mut self.channels[usize::from(r.singer_id())];
                let n = ch.history.len();
                ch.history[ch.pos] = r.range_mm();
                ch.pos = (ch.pos + 1) % n;
                ch.filled = (ch.filled + 1).min(n);
                self.scratch.clear();
                self.scratch.extend_from_slice(&ch.history[..ch.filled]);
                self.scratch.sort_unstable();
                let median = self.scratch[self.scratch.len() / 2];

                let bucket = quantize_mm_to_bucket(median, &self.quantize);
                let out = match ch.accepted {
                    None => {
                        ch.accepted = Some(median);
                        median
                    }
                    Some(prev) if quantize_mm_to_bucket(prev, &self.quantize) == bucket => {
                        ch.pending = None;
                        ch.accepted = Some(median);
                        median
                    }
                    Some(prev) => {
                        let count = match ch.pending {
                            Some((b, c)) if b == bucket => c + 1,
                            _ => 1,
                        };
                        if count >= hold {
                            ch.pending = None;
                            ch.accepted = Some(median);
                            median
                        } else {
                            ch.pending = Some((bucket, count));
                            prev
                        }
                    }
                };
                SensorReading::new(r.singer_id(), out, r.timestamp(), &self.quantize)
            })
            .collect();
        SensorFrame::new(frame.frame_seq(), readings).expect("input frame is complete")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(seq: u64, mm: u32) -> SensorFrame {
        let q = QuantizeConfig::default();
        SensorFrame::new(seq, (0..16).map(|i| SensorReading::new(i, mm, seq, &q)).collect())
            .unwrap()
    }

    fn run(s: &mut ReadingSmoother, input: &[u32]) -> Vec<u32> {
        input
            .iter()
            .enumerate()
            .map(|(i, &mm)| s.process(&frame(i as u64, mm)).reading(0).range_mm())
            .collect()
    }

    #[test]
    fn spike_removed() {
        let mut s = ReadingSmoother::new(
            SmoothingConfig { median_window: 3, hold_ticks: 1 },
            QuantizeConfig::default(),
        );
        assert_eq!(run(&mut s, &[5000, 5000, 300, 5000, 5000]), vec![5000; 5]);
    }

    #[test]
    fn constant_unchanged() {
        let mut s = ReadingSmoother::new(SmoothingConfig::default(), QuantizeConfig::default());
        assert_eq!(run(&mut s, &[1234; 10]), vec![1234; 10]);
    }

    #[test]
    fn step_accepted_after_hold() {
        for hold in 1..6u32 {
            let mut s = ReadingSmoother::new(
                SmoothingConfig { median_window: 1, hold_ticks: hold },
                QuantizeConfig::default(),
            );
            let mut input = vec![5000; 4];
            input.extend([1000; 10]);
            let out = run(&mut s, &input);
            let first_new = out.iter().position(|&v| v == 1000).unwrap();
            // the step starts at frame 4 and must persist `hold` frames
            assert_eq!(first_new, 4 + hold as usize - 1, "hold {hold}");
            assert!(out[first_new..].iter().all(|&v| v == 1000));
        }
    }

    #[test]
    fn median_oracle() {
        let input = [900, 4000, 300, 2200, 2100, 5000, 700];
        let mut s = ReadingSmoother::new(
            SmoothingConfig { median_window: 3, hold_ticks: 1 },
            QuantizeConfig::default(),
        );
        let out = run(&mut s, &input);
        for i in 0..input.len() {
            let mut w: Vec<u32> = input[i.saturating_sub(2)..=i].to_vec();
            w.sort_unstable();
            assert_eq!(out[i], w[w.len() / 2], "frame {i}");
        }
    }
}
