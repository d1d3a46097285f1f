//! Tagged sensor frames from the aggregating microcontroller, and the
//! latest-value slot acquisition threads publish into.
//!
//! Wire layout: `0xA5`, singer id, the six ASCII bytes of one range frame,
//! then the sum modulo 256 of the id and ASCII bytes.

use std::io::Read;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use parking_lot::Mutex;

use super::{
    encode_maxsonar, MaxSonarParser, QuantizeConfig, Result, SensorError, SensorFrame,
    SensorReading, SENSOR_COUNT,
};

pub const TAG_SYNC: u8 = 0xA5;
const FRAME_LEN: usize = 9;

pub fn encode_tagged(singer: u8, range_mm: u32) -> Result<[u8; FRAME_LEN]> {
    if usize::from(singer) >= SENSOR_COUNT {
        return Err(SensorError::InvalidInput(format!("singer id {singer} out of range")));
    }
    let ascii = encode_maxsonar(range_mm)?;
    let mut out = [0u8; FRAME_LEN];
    out[0] = TAG_SYNC;
    out[1] = singer;
    out[2..8].copy_from_slice(&ascii);
    out[8] = checksum(&out[1..8]);
    Ok(out)
}

fn checksum(payload: &[u8]) -> u8 {
    payload.iter().fold(0u8, |acc, b| acc.wrapping_add(*b))
}

/// Incremental parser for tagged frames; yields `(singer, range_mm)`.
#[derive(Debug, Clone, Default)]
pub struct TaggedParser {
    buf: Vec<u8>,
    rejected: u64,
}

impl TaggedParser {
    pub fn new() -> Self {
        Self::default()
    }

    /// Frames dropped for a bad checksum, id or payload.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn feed(&mut self, bytes: &[u8], mut emit: impl FnMut(u8, u32)) {
        let mut replay: Vec<u8> = Vec::new();
        let mut input = bytes.iter().copied();
        loop {
            let b = if replay.is_empty() {
                match input.next() {
                    Some(b) => b,
                    None => break,
                }
            } else {
                replay.remove(0)
            };
            if self.buf.is_empty() && b != TAG_SYNC {
                continue;
            }
            self.buf.push(b);
            if self.buf.len() < FRAME_LEN {
                continue;
            }
            let frame = std::mem::take(&mut self.buf);
            match decode(&frame) {
                Some((id, mm)) => emit(id, mm),
                None => {
                    self.rejected += 1;
                    // resynchronize on the next sync byte inside the dropped frame
                    if let Some(p) = frame[1..].iter().position(|&x| x == TAG_SYNC) {
                        let mut rest = frame[p + 1..].to_vec();
                        rest.append(&mut replay);
                        replay = rest;
                    }
                }
            }
        }
    }
}

fn decode(frame: &[u8]) -> Option<(u8, u32)> {
    let id = frame[1];
    if usize::from(id) >= SENSOR_COUNT || checksum(&frame[1..8]) != frame[8] {
        return None;
    }
    let mut p = MaxSonarParser::new();
    let mut out = None;
    p.feed(&frame[2..8], |mm| out = Some(mm));
    out.map(|mm| (id, mm))
}

/// Keeps the freshest range per singer and snapshots them into frames.
#[derive(Debug, Clone)]
pub struct FrameAssembler {
    quantize: QuantizeConfig,
    latest: [Option<u32>; SENSOR_COUNT],
    seq: u64,
}

impl FrameAssembler {
    pub fn new(quantize: QuantizeConfig) -> Self {
        Self {
            quantize,
            latest: [None; SENSOR_COUNT],
            seq: 0,
        }
    }

    pub fn update(&mut self, singer: u8, range_mm: u32) {
        if let Some(slot) = self.latest.get_mut(usize::from(singer)) {
            *slot = Some(range_mm);
        }
    }

    /// Singers never heard from read as far away.
    pub fn snapshot(&mut self, timestamp: u64) -> SensorFrame {
        let readings = (0..SENSOR_COUNT)
            .map(|i| {
                let mm = self.latest[i].unwrap_or(self.quantize.max_range_mm);
                SensorReading::new(i as u8, mm, timestamp, &self.quantize)
            })
            .collect();
        let frame = SensorFrame::new(self.seq, readings).expect("complete frame");
        self.seq += 1;
        frame
    }
}

/// Latest-value mailbox between an acquisition thread and the ensemble.
#[derive(Debug, Default)]
pub struct LatestFrame {
    slot: Mutex<Option<SensorFrame>>,
}

impl LatestFrame {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces any unread frame.
    pub fn publish(&self, frame: SensorFrame) {
        *self.slot.lock() = Some(frame);
    }

    pub fn take(&self) -> Option<SensorFrame> {
        self.slot.lock().take()
    }
}

/// Reads tagged frames from `source` on a thread of its own and publishes a
/// frame into `latest` at most once per `period`. The count of newly
/// rejected frames is passed to `on_reject`. The thread ends at end of stream, on a read error or once
/// `stop` is set and the next read returns.
pub fn spawn_tagged_reader(
    mut source: impl Read + Send + 'static,
    quantize: QuantizeConfig,
    period: Duration,
    latest: Arc<LatestFrame>,
    on_reject: impl Fn(u64) + Send + 'static,
    stop: Arc<AtomicBool>,
) -> std::io::Result<JoinHandle<()>> {
    std::thread::Builder::new()
        .name("sensor-reader".into())
        .spawn(move || {
            let mut parser = TaggedParser::new();
            let mut assembler = FrameAssembler::new(quantize);
            let mut buf = [0u8; 256];
            let started = Instant::now();
            let mut last = started;
            let mut reported = 0;
            while !stop.load(Ordering::Relaxed) {
                let n = match source.read(&mut buf) {
                    Ok(0) => break,
                    Ok(n) => n,
                    Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                    Err(e) => {
                        log::error!("sensor stream failed: {e}");
                        break;
                    }
                };
                parser.feed(&buf[..n], |id, mm| assembler.update(id, mm));
                let rejected = parser.rejected();
                if rejected > reported {
                    on_reject(rejected - reported);
                    reported = rejected;
                }
                if last.elapsed() >= period {
                    last = Instant::now();
                    let stamp = started.elapsed().as_micros() as u64;
                    latest.publish(assembler.snapshot(stamp));
                }
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU64;

    #[test]
    fn tagged_round_trip_with_noise() {
        let mut stream = vec![0x00, 0xA5, 0x33];
        for i in 0..16u8 {
            stream.extend(encode_tagged(i, 300 + u32::from(i) * 100).unwrap());
        }
        let mut bad = encode_tagged(2, 999).unwrap();
        bad[8] ^= 1;
        stream.extend(bad);
        let mut p = TaggedParser::new();
        let mut got = Vec::new();
        for c in stream.chunks(5) {
            p.feed(c, |id, mm| got.push((id, mm)));
        }
        let want: Vec<_> = (0..16u8).map(|i| (i, 300 + u32::from(i) * 100)).collect();
        assert_eq!(got, want);
        assert!(p.rejected() >= 1);
    }

    #[test]
    fn assembler_fills_missing() {
        let mut a = FrameAssembler::new(QuantizeConfig::default());
        a.update(4, 800);
        let f = a.snapshot(10);
        assert_eq!(f.reading(4).range_mm(), 800);
        assert_eq!(f.reading(5).bucket(), 10);
        assert_eq!(a.snapshot(11).frame_seq(), 1);
    }

    #[test]
    fn latest_frame_overwrites() {
        let slot = LatestFrame::new();
        let q = QuantizeConfig::default();
        slot.publish(SensorFrame::empty(1, 0, &q));
        slot.publish(SensorFrame::empty(2, 0, &q));
        assert_eq!(slot.take().unwrap().frame_seq(), 2);
        assert!(slot.take().is_none());
    }

    #[test]
    fn reader_publishes_what_it_parsed() {
        let mut bytes = vec![0x13, 0x37];
        let mut bad = encode_tagged(3, 100).unwrap();
        bad[8] ^= 0x40;
        bytes.extend(bad);
        bytes.extend(encode_tagged(3, 900).unwrap());
        bytes.extend(encode_tagged(9, 4000).unwrap());
        let latest = Arc::new(LatestFrame::new());
        let malformed = Arc::new(AtomicU64::new(0));
        spawn_tagged_reader(
            std::io::Cursor::new(bytes),
            QuantizeConfig::default(),
            Duration::ZERO,
            latest.clone(),
            {
                let m = malformed.clone();
                move |n| {
                    m.fetch_add(n, Ordering::Relaxed);
                }
            },
            Arc::new(AtomicBool::new(false)),
        )
        .unwrap()
        .join()
        .unwrap();
        let frame = latest.take().unwrap();
        assert_eq!(frame.reading(3).range_mm(), 900);
        assert_eq!(frame.reading(9).range_mm(), 4000);
        assert_eq!(frame.reading(0).range_mm(), 5000);
        assert_eq!(malformed.load(Ordering::Relaxed), 1);
    }
}
