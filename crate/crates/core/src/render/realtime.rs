use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{Engine, RenderError};
use crate::control::EngineHandle;
use crate::scalar::Sample;

/// Block-oriented audio I/O.
pub trait AudioDevice<T>: Send {
    fn sample_rate(&self) -> u32;
    fn output_channels(&self) -> usize;
    /// Blocks until the device wants the next block.
    fn wait_block(&mut self, frames: usize);
    /// Fills `buf` with mono input; false once the input is exhausted.
    fn read_input(&mut self, buf: &mut [T]) -> bool;
    fn write_output(&mut self, buf: &[T]);
}

/// Software device: input from memory, output optionally captured, blocks
/// paced by the wall clock or handed out as fast as requested.
pub struct VirtualDevice<T> {
    sample_rate: u32,
    channels: usize,
    input: Vec<T>,
    pos: usize,
    repeat_input: bool,
    paced: bool,
    started: Option<Instant>,
    frames_done: u64,
    capture: Option<Vec<T>>,
}

impl<T: Sample> VirtualDevice<T> {
    pub fn new(sample_rate: u32, channels: usize, input: Vec<T>) -> Self {
        Self {
            sample_rate,
            channels,
            input,
            pos: 0,
            repeat_input: false,
            paced: false,
            started: None,
            frames_done: 0,
            capture: None,
        }
    }

    /// Deliver blocks at the real-time rate.
    pub fn paced(mut self) -> Self {
        self.paced = true;
        self
    }

    pub fn repeat_input(mut self) -> Self {
        self.repeat_input = true;
        self
    }

    pub fn capture(mut self) -> Self {
        self.capture = Some(Vec::new());
        self
    }

    pub fn captured(&self) -> &[T] {
        self.capture.as_deref().unwrap_or(&[])
    }
}

impl<T: Sample> AudioDevice<T> for VirtualDevice<T> {
    fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    fn output_channels(&self) -> usize {
        self.channels
    }

    fn wait_block(&mut self, frames: usize) {
        if !self.paced {
            return;
        }
        let start = *self.started.get_or_insert_with(Instant::now);
        let due = Duration::from_secs_f64(self.frames_done as f64 / f64::from(self.sample_rate));
        let now = start.elapsed();
        if due > now {
            std::thread::sleep(due - now);
        }
        self.frames_done += frames as u64;
    }

    fn read_input(&mut self, buf: &mut [T]) -> bool {
        if self.input.is_empty() {
            buf.iter_mut().for_each(|x| *x = T::zero());
            return self.repeat_input;
        }
        for x in buf.iter_mut() {
            if self.pos >= self.input.len() {
                if !self.repeat_input {
                    *x = T::zero();
                    continue;
                }
                self.pos = 0;
            }
            *x = self.input[self.pos];
            self.pos += 1;
        }
        self.repeat_input || self.pos < self.input.len()
    }

    fn write_output(&mut self, buf: &[T]) {
        if let Some(c) = &mut self.capture {
            c.extend_from_slice(buf);
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RealtimeOptions {
    /// Stop after this many blocks.
    pub max_blocks: Option<u64>,
    pub stop: Arc<AtomicBool>,
    /// Milliseconds to stall inside the next block; cleared once used.
    pub stall_ms: Arc<AtomicU64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub blocks: u64,
    pub missed_deadlines: u64,
    pub mean_block_s: f64,
    pub max_block_s: f64,
    pub deadline_s: f64,
}

/// Drives the engine from a device until the input ends, `max_blocks` is
/// reached or `stop` is set.
///
/// A block that overruns its deadline is counted and the next block runs
/// degraded, dropping new sample starts.
pub fn run_realtime<T: Sample>(
    engine: &mut Engine<T>,
    device: &mut dyn AudioDevice<T>,
    handle: &EngineHandle,
    options: &RealtimeOptions,
) -> Result<RunReport, RenderError> {
    if device.sample_rate() != engine.sample_rate() {
        return Err(RenderError::Device(format!(
            "device runs at {} Hz, engine at {} Hz",
            device.sample_rate(),
            engine.sample_rate()
        )));
    }
    if device.output_channels() != engine.output_channels() {
        return Err(RenderError::Device(format!(
            "device has {} output channels, engine renders {} (use the stereo downmix for desk testing)",
            device.output_channels(),
            engine.output_channels()
        )));
    }
    engine.attach(handle.clone());
    let block = engine.block_size();
    let deadline = Duration::from_secs_f64(block as f64 / f64::from(engine.sample_rate()));
    let mut input = vec![T::zero(); block];
    let mut output = vec![T::zero(); block * engine.output_channels()];
    let mut report = RunReport { deadline_s: deadline.as_secs_f64(), ..Default::default() };
    let mut total = Duration::ZERO;
    let mut missed_last = false;
    loop {
        if options.stop.load(Ordering::Relaxed) || options.max_blocks.is_some_and(|m| report.blocks >= m) {
            break;
        }
        device.wait_block(block);
        let more = device.read_input(&mut input);
        let t0 = Instant::now();
        engine.set_degraded(missed_last);
        engine.process_block(&input, &mut output);
        let stall = options.stall_ms.swap(0, Ordering::Relaxed);
        if stall > 0 {
            std::thread::sleep(Duration::from_millis(stall));
        }
        let elapsed = t0.elapsed();
        missed_last = elapsed > deadline;
        handle.metrics.record_block(elapsed.as_micros() as u64, missed_last);
        device.write_output(&output);
        report.blocks += 1;
        report.missed_deadlines += u64::from(missed_last);
        report.max_block_s = report.max_block_s.max(elapsed.as_secs_f64());
        total += elapsed;
        if !more {
            break;
        }
    }
    engine.set_degraded(false);
    if report.blocks > 0 {
        report.mean_block_s = total.as_secs_f64() / report.blocks as f64;
    }
    Ok(report)
}
