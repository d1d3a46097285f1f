//! ASCII range frames: `R`, four decimal digits of millimetres, CR.

use super::{Result, SensorError};

/// Incremental frame parser; chunk boundaries do not affect the output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaxSonarParser {
    digits: Option<(u8, u32)>,
    malformed: u64,
}

impl MaxSonarParser {
    pub fn new() -> Self {
        Self::default()
    }

    /// Frames abandoned because of an unexpected byte.
    pub fn malformed(&self) -> u64 {
        self.malformed
    }

    /// Feeds bytes, calling `emit` with each decoded range.
    pub fn feed(&mut self, bytes: &[u8], mut emit: impl FnMut(u32)) {
        for &b in bytes {
            self.push(b, &mut emit);
        }
    }

    pub fn parse(&mut self, bytes: &[u8]) -> Vec<u32> {
        let mut out = Vec::new();
        self.feed(bytes, |r| out.push(r));
        out
    }

    fn push(&mut self, b: u8, emit: &mut impl FnMut(u32)) {
        match (self.digits, b) {
            (_, b'R') => {
                if self.digits.is_some() {
                    self.malformed += 1;
                }
                self.digits = Some((0, 0));
            }
            (Some((n, v)), b'0'..=b'9') if n < 4 => {
                self.digits = Some((n + 1, v * 10 + u32::from(b - b'0')));
            }
            (Some((4, v)), b'\r') => {
                self.digits = None;
                emit(v);
            }
            (Some(_), _) => {
                self.digits = None;
                self.malformed += 1;
            }
            // noise between frames
            (None, _) => {}
        }
    }
}

pub fn encode_maxsonar(range_mm: u32) -> Result<[u8; 6]> {
    if range_mm > 9999 {
        return Err(SensorError::InvalidInput(format!(
            "range {range_mm} mm does not fit four digits"
        )));
    }
    let mut out = *b"R0000\r";
    let mut v = range_mm;
    for i in (1..5).rev() {
        out[i] = b'0' + (v % 10) as u8;
        v /= 10;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_frame() {
        assert_eq!(MaxSonarParser::new().parse(b"R1000\r"), vec![1000]);
    }

    #[test]
    fn split_frame() {
        let mut p = MaxSonarParser::new();
        assert!(p.parse(b"R10").is_empty());
        assert_eq!(p.parse(b"00\r"), vec![1000]);
    }

    #[test]
    fn resync_counts_malformed() {
        let mut p = MaxSonarParser::new();
        assert_eq!(p.parse(b"RXX00\rR0500\r"), vec![500]);
        assert_eq!(p.malformed(), 1);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(&encode_maxsonar(500).unwrap(), b"R0500\r");
        assert_eq!(&encode_maxsonar(5000).unwrap(), b"R5000\r");
        assert!(encode_maxsonar(10_000).is_err());
    }

    #[test]
    fn round_trip_all() {
        let mut p = MaxSonarParser::new();
        for x in 0..=9999 {
            assert_eq!(p.parse(&encode_maxsonar(x).unwrap()), vec![x]);
        }
        assert_eq!(p.malformed(), 0);
    }

    proptest! {
        #[test]
        fn chunk_invariance(
            values in proptest::collection::vec(0u32..10_000, 0..20),
            noise in proptest::collection::vec(any::<u8>(), 0..30),
            cuts in proptest::collection::vec(any::<prop::sample::Index>(), 0..10),
        ) {
            let mut stream = Vec::new();
            for (i, v) in values.iter().enumerate() {
                stream.extend_from_slice(&encode_maxsonar(*v).unwrap());
                if i == values.len() / 2 {
                    stream.extend_from_slice(&noise);
                }
            }
            let whole = MaxSonarParser::new().parse(&stream);
            let mut points: Vec<usize> = cuts.iter().map(|c| c.index(stream.len() + 1)).collect();
            points.sort_unstable();
            let mut p = MaxSonarParser::new();
            let mut pieces = Vec::new();
            let mut last = 0;
            for c in points.into_iter().chain([stream.len()]) {
                pieces.extend(p.parse(&stream[last..c]));
                last = c;
            }
            prop_assert_eq!(whole, pieces);
        }
    }
}
