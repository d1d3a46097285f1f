//! RGBW ring patterns and the aggregated serial frame for all sixteen rings.
//!
//! Frame layout: `0x5A`, protocol version, then for each singer its id byte
//! and `4 * pixels` channel bytes, then the sum modulo 256 of every byte
//! after the version byte.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensors::SENSOR_COUNT;

pub const LED_MAGIC: u8 = 0x5A;
pub const LED_PROTOCOL_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedConfig {
    pub pixels: usize,
    pub update_hz: f64,
    /// Pulse rate when the nearest listener is in bucket 10.
    pub base_rate_hz: f64,
    /// Pulse rate at bucket 1.
    pub max_rate_hz: f64,
}

impl Default for LedConfig {
    fn default() -> Self {
        Self {
            pixels: 12,
            update_hz: 30.0,
            base_rate_hz: 0.5,
            max_rate_hz: 4.0,
        }
    }
}

impl LedConfig {
    pub fn validate(&self) -> Result<(), LedError> {
        if self.pixels == 0 || self.pixels > 63 {
            return Err(LedError::InvalidConfig("pixels must be in 1..=63".into()));
        }
        if !(self.base_rate_hz > 0.0 && self.max_rate_hz >= self.base_rate_hz) {
            return Err(LedError::InvalidConfig(
                "pulse rates need 0 < base_rate_hz <= max_rate_hz".into(),
            ));
        }
        if !(self.update_hz > 0.0) {
            return Err(LedError::InvalidConfig("update_hz must be positive".into()));
        }
        Ok(())
    }

    /// Linear from `base_rate_hz` at bucket 10 to `max_rate_hz` at bucket 1.
    pub fn pulse_rate_hz(&self, bucket: u8) -> f64 {
        let b = f64::from(bucket.clamp(1, 10));
        self.base_rate_hz + (10.0 - b) / 9.0 * (self.max_rate_hz - self.base_rate_hz)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedError {
    #[error("invalid LED config: {0}")]
    InvalidConfig(String),
    #[error("frame is {got} bytes, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("bad frame header")]
    Header,
    #[error("checksum mismatch")]
    Checksum,
    #[error("singer ids out of order")]
    SingerOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Rgbw {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub w: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LedPattern {
    Off,
    Solid,
    Pulse { rate_hz: f64 },
    Chase { rate_hz: f64 },
}

impl LedPattern {
    pub fn is_off(&self) -> bool {
        matches!(self, LedPattern::Off)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedRingState {
    pub singer_id: u8,
    pub pattern: LedPattern,
    pub phase: f64,
    pub pixels: Vec<Rgbw>,
}

const PULSE_COLOUR: Rgbw = Rgbw { r: 255, g: 170, b: 60, w: 255 };

fn scale(c: Rgbw, k: f64) -> Rgbw {
    let s = |v: u8| (f64::from(v) * k).round().clamp(0.0, 255.0) as u8;
    Rgbw { r: s(c.r), g: s(c.g), b: s(c.b), w: s(c.w) }
}

/// Pattern for one singer: dark when inactive, pulsing faster as the
/// audience gets closer when active.
pub fn state_to_pattern(
    singer_id: u8,
    active: bool,
    bucket: u8,
    clock_s: f64,
    config: &LedConfig,
) -> LedRingState {
    if !active {
        return LedRingState {
            singer_id,
            pattern: LedPattern::Off,
            phase: 0.0,
            pixels: vec![Rgbw::default(); config.pixels],
        };
    }
    let rate = config.pulse_rate_hz(bucket);
    let phase = (rate * clock_s).rem_euclid(1.0);
    let level = 0.5 * (1.0 - (TAU * phase).cos());
    LedRingState {
        singer_id,
        pattern: LedPattern::Pulse { rate_hz: rate },
        phase,
        pixels: vec![scale(PULSE_COLOUR, level); config.pixels],
    }
}

pub fn frame_len(pixels: usize) -> usize {
    2 + SENSOR_COUNT * (1 + 4 * pixels) + 1
}

/// Encodes all rings; `rings[i]` must hold singer `i`.
pub fn encode_led_frame(rings: &[Vec<Rgbw>], pixels: usize) -> Vec<u8> {
    assert_eq!(rings.len(), SENSOR_COUNT, "one ring per singer");
    let mut out = Vec::with_capacity(frame_len(pixels));
    out.push(LED_MAGIC);
    out.push(LED_PROTOCOL_VERSION);
    for (id, ring) in rings.iter().enumerate() {
        assert_eq!(ring.len(), pixels, "constant pixel count");
        out.push(id as u8);
        for p in ring {
            out.extend_from_slice(&[p.r, p.g, p.b, p.w]);
        }
    }
    let sum = out[2..].iter().fold(0u8, |a, b| a.wrapping_add(*b));
    out.push(sum);
    out
}

pub fn encode_states(states: &[LedRingState], pixels: usize) -> Vec<u8> {
    let rings: Vec<Vec<Rgbw>> = states.iter().map(|s| s.pixels.clone()).collect();
    encode_led_frame(&rings, pixels)
}

/// Reference decoder standing in for the microcontroller firmware.
pub fn decode_led_frame(bytes: &[u8], pixels: usize) -> Result<Vec<Vec<Rgbw>>, LedError> {
    let expected = frame_len(pixels);
    if bytes.len() != expected {
        return Err(LedError::Length { got: bytes.len(), expected });
    }
    if bytes[0] != LED_MAGIC || bytes[1] != LED_PROTOCOL_VERSION {
        return Err(LedError::Header);
    }
    let body = &bytes[2..expected - 1];
    if body.iter().fold(0u8, |a, b| a.wrapping_add(*b)) != bytes[expected - 1] {
        return Err(LedError::Checksum);
    }
    body.chunks_exact(1 + 4 * pixels)
        .enumerate()
        .map(|(i, chunk)| {
            if usize::from(chunk[0]) != i {
                return Err(LedError::SingerOrder);
            }
            Ok(chunk[1..]
                .chunks_exact(4)
                .map(|c| Rgbw { r: c[0], g: c[1], b: c[2], w: c[3] })
                .collect())
        })
        .collect()
}

/// Destination for encoded frames.
pub trait LedSink: Send {
    fn write_frame(&mut self, frame: &[u8]) -> std::io::Result<()>;
}

/// Keeps written frames in memory; stands in for the serial port in tests.
#[derive(Debug, Default)]
pub struct LoopbackSink {
    pub frames: Vec<Vec<u8>>,
}

impl LedSink for LoopbackSink {
    fn write_frame(&mut self, frame: &[u8]) -> std::io::Result<()> {
        self.frames.push(frame.to_vec());
        Ok(())
    }
}

impl<W: std::io::Write + Send> LedSink for std::io::BufWriter<W> {
    fn write_frame(&mut self, frame: &[u8]) -> std::io::Result<()> {
        use std::io::Write;
        self.write_all(frame)?;
        self.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn inactive_is_dark() {
        let s = state_to_pattern(3, false, 1, 12.3, &LedConfig::default());
        assert!(s.pattern.is_off());
        assert!(s.pixels.iter().all(|p| *p == Rgbw::default()));
        assert_eq!(s.pixels.len(), 12);
    }

    #[test]
    fn pulse_rates() {
        let c = LedConfig::default();
        let far = state_to_pattern(0, true, 10, 0.0, &c);
        assert_eq!(far.pattern, LedPattern::Pulse { rate_hz: 0.5 });
        let near = state_to_pattern(0, true, 1, 0.0, &c);
        assert_eq!(near.pattern, LedPattern::Pulse { rate_hz: 4.0 });
        // phase advances at the pulse rate
        for t in [0.1, 0.4, 1.3, 2.25] {
            let s = state_to_pattern(0, true, 10, t, &c);
            assert!((s.phase - (0.5 * t) % 1.0).abs() < 1e-12);
        }
        for b in 1..10u8 {
            assert!(c.pulse_rate_hz(b) >= c.pulse_rate_hz(b + 1));
        }
    }

    #[test]
    fn all_off_frame_length() {
        let rings = vec![vec![Rgbw::default(); 12]; 16];
        let f = encode_led_frame(&rings, 12);
        assert_eq!(f.len(), 787);
        assert_eq!(&f[..2], &[0x5A, 1]);
        assert_eq!(f[2], 0);
        assert_eq!(f[2 + 49], 1);
    }

    #[test]
    fn round_trip_and_corruption() {
        let mut rng = rng_from_seed(42);
        for _ in 0..1000 {
            let rings: Vec<Vec<Rgbw>> = (0..16)
                .map(|_| {
                    (0..12)
                        .map(|_| Rgbw { r: rng.random(), g: rng.random(), b: rng.random(), w: rng.random() })
                        .collect()
                })
                .collect();
            let mut f = encode_led_frame(&rings, 12);
            assert_eq!(decode_led_frame(&f, 12).unwrap(), rings);
            let i = rng.random_range(2..f.len());
            f[i] = f[i].wrapping_add(rng.random_range(1..=255));
            assert!(decode_led_frame(&f, 12).is_err());
        }
    }
}
