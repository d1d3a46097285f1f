use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Engine, TraceRecord};
use crate::control::ControlCommand;
use crate::looper::LoopSession;
use crate::scalar::Sample;

/// An operator command at a point in the performance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedControl {
    pub t_s: f64,
    pub command: ControlCommand,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlScript {
    pub events: Vec<TimedControl>,
}

#[derive(Debug, Clone)]
pub struct OfflineOutput<T> {
    pub channels: usize,
    /// Interleaved frames.
    pub audio: Vec<T>,
    pub trace: Vec<TraceRecord>,
    pub loop_session: LoopSession,
}

impl<T: Sample> OfflineOutput<T> {
    pub fn frames(&self) -> usize {
        self.audio.len() / self.channels
    }

    pub fn channel(&self, c: usize) -> Vec<T> {
        self.audio.iter().skip(c).step_by(self.channels).copied().collect()
    }
}

/// Runs the engine over `input` plus the configured tail, as fast as it goes.
pub fn render_offline<T: Sample>(
    engine: &mut Engine<T>,
    input: &[T],
    controls: &ControlScript,
) -> OfflineOutput<T> {
    let sr = f64::from(engine.sample_rate());
    for ev in &controls.events {
        let at = (ev.t_s.max(0.0) * sr).round() as u64;
        engine.schedule_control(engine.clock() + at, ev.command.clone());
    }
    engine.enable_trace();
    let block = engine.block_size();
    let channels = engine.output_channels();
    let tail = (engine.render_config().tail_s * sr).round() as usize;
    let total = input.len() + tail;
    let mut audio = vec![T::zero(); total * channels];
    let mut silence = vec![T::zero(); block];
    let mut pos = 0;
    while pos < total {
        let n = block.min(total - pos);
        let src: &[T] = if pos + n <= input.len() {
            &input[pos..pos + n]
        } else {
            silence.iter_mut().for_each(|x| *x = T::zero());
            if pos < input.len() {
                let have = input.len() - pos;
                silence[..have].copy_from_slice(&input[pos..]);
            }
            &silence[..n]
        };
        engine.process_block(src, &mut audio[pos * channels..(pos + n) * channels]);
        pos += n;
    }
    OfflineOutput {
        channels,
        audio,
        trace: engine.take_trace(),
        loop_session: engine.loop_session().clone(),
    }
}

/// Writes the trace as one JSON object per line.
pub fn write_trace(trace: &[TraceRecord], mut w: impl Write) -> std::io::Result<()> {
    for r in trace {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_trace(r: impl BufRead) -> std::io::Result<Vec<TraceRecord>> {
    r.lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| {
            let l = l?;
            serde_json::from_str(&l).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        })
        .collect()
}
