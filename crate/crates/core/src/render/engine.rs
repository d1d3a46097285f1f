use std::collections::VecDeque;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mix_voices, ChannelLayout, OutputStage, RenderConfig, RenderError, Voice};
use crate::analysis::{AnalysisConfig, GateProfile, StreamAnalyzer, VocalFeatures};
use crate::control::{
    ControlCommand, EngineHandle, LoopSummary, SingerSnapshot, StateSnapshot, SNAPSHOT_SCHEMA_VERSION,
};
use crate::ensemble::{
    CommandKind, Ensemble, EnsembleCommand, EnsembleConfig, EnsembleContext, PhraseSummary,
};
use crate::led::{encode_states, state_to_pattern, LedConfig, LedSink};
use crate::library::{assign_playlists, build_matrix, BucketConfig, GroupingConfig, SampleLibrary};
use crate::looper::{
    loop_contribution, CueDetector, LoopConfig, LoopRecorder, LoopSession, LoopState,
    TopologyTracker,
};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::scalar::Sample;
use crate::sensors::{
    simulate_sensors, AudienceSimState, Avatar, AvatarScript, LatestFrame, QuantizeConfig,
    ReadingSmoother, SensorFrame, SmoothingConfig, SENSOR_COUNT,
};

/// Ensemble decisions run at this rate.
pub const CONTROL_RATE_HZ: u32 = 100;
pub const SNAPSHOT_RATE_HZ: u32 = 20;

/// Where sensor frames come from.
#[derive(Debug)]
pub enum SensorInput {
    /// Nobody near, ever.
    Silent,
    Simulated {
        sim: AudienceSimState,
        script: Option<AvatarScript>,
        rng: ChaCha8Rng,
    },
    /// Frames assembled by a transport thread.
    Shared(Arc<LatestFrame>),
}

impl SensorInput {
    pub fn simulated(sim: AudienceSimState, script: Option<AvatarScript>, seed: u64) -> Self {
        SensorInput::Simulated {
            sim,
            script,
            rng: rng_from_seed(derive_seed(seed, stream::SENSOR_JITTER)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorTiming {
    pub cycle_hz: u32,
    pub quantize: QuantizeConfig,
    pub smoothing: SmoothingConfig,
}

impl Default for SensorTiming {
    fn default() -> Self {
        Self {
            cycle_hz: 10,
            quantize: QuantizeConfig::default(),
            smoothing: SmoothingConfig::default(),
        }
    }
}

/// Everything needed to build an [`Engine`].
pub struct EngineParts {
    pub seed: u64,
    pub analysis: AnalysisConfig,
    pub profile: GateProfile,
    pub library: Arc<SampleLibrary>,
    pub buckets: BucketConfig,
    pub grouping: GroupingConfig,
    pub ensemble: EnsembleConfig,
    pub sensors: SensorTiming,
    pub sensor_input: SensorInput,
    pub looper: LoopConfig,
    pub render: RenderConfig,
    pub led: LedConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceEvent {
    Command { command: EnsembleCommand },
    Phrase { phrase: PhraseSummary },
    Control { command: ControlCommand },
    ControlError { message: String },
    LoopLayer { layer_id: u32, duration_samples: u64 },
    Topology { chosen_singer: Option<u8> },
}

/// One line of the command trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    #[serde(flatten)]
    pub event: TraceEvent,
}

/// The whole pipeline: analysis, ensemble, sensors, looper and mixer.
///
/// Audio goes through [`Engine::process_block`]; everything else happens on
/// control ticks every `sample_rate / 100` samples, which are aligned to
/// the engine clock regardless of block size.
pub struct Engine<T: Sample> {
    sample_rate: u32,
    tick_len: u64,
    sensor_period: u64,
    snapshot_period: u64,
    led_period: u64,
    next_led: u64,
    clock: u64,
    analyzer: StreamAnalyzer<T>,
    hops: Vec<VocalFeatures>,
    ensemble: Ensemble,
    cmds: Vec<EnsembleCommand>,
    sensor_input: SensorInput,
    quantize: QuantizeConfig,
    smoother: ReadingSmoother,
    frame: SensorFrame,
    frame_seq: u64,
    library: Arc<SampleLibrary>,
    voices: Vec<Option<Voice>>,
    layout: ChannelLayout,
    render: RenderConfig,
    output: OutputStage<T>,
    planar: Vec<T>,
    loop_scratch: Vec<T>,
    recorder: LoopRecorder,
    loops: LoopState,
    topology: TopologyTracker,
    cue: CueDetector,
    session: LoopSession,
    singer_seeds: [u64; SENSOR_COUNT],
    led: LedConfig,
    led_sink: Option<Box<dyn LedSink>>,
    trace: Option<Vec<TraceRecord>>,
    handle: Option<EngineHandle>,
    scheduled: VecDeque<(u64, ControlCommand)>,
    last_error: Option<String>,
    degraded: bool,
}

impl<T: Sample> Engine<T> {
    pub fn new(parts: EngineParts) -> Result<Self, RenderError> {
        let EngineParts {
            seed,
            analysis,
            profile,
            library,
            buckets,
            grouping,
            ensemble,
            sensors,
            sensor_input,
            looper,
            render,
            led,
        } = parts;
        render.validate()?;
        looper.validate()?;
        led.validate().map_err(|e| RenderError::Config(format!("led: {e}")))?;
        sensors.quantize.validate()?;
        let sr = render.sample_rate_hz;
        if analysis.sample_rate_hz != sr || library.sample_rate() != sr {
            return Err(RenderError::Config(format!(
                "analysis runs at {} Hz and the library at {} Hz, render at {sr} Hz",
                analysis.sample_rate_hz,
                library.sample_rate()
            )));
        }
        let tick_len = u64::from(sr / CONTROL_RATE_HZ);
        if sensors.cycle_hz == 0 || sr % sensors.cycle_hz != 0 || u64::from(sr / sensors.cycle_hz) % tick_len != 0 {
            return Err(RenderError::Config(format!(
                "sensors.cycle_hz: {} Hz does not divide the {CONTROL_RATE_HZ} Hz control rate",
                sensors.cycle_hz
            )));
        }
        if let SensorInput::Simulated { sim, script, .. } = &sensor_input {
            sim.validate()?;
            if let Some(s) = script {
                s.validate()?;
            }
        }
        let hop = analysis.hop;
        let cue = CueDetector::new(looper.cue, hop, sr);
        let analyzer = StreamAnalyzer::new(analysis, profile)?;
        let matrix = Arc::new(build_matrix(&library.performance_samples(), &buckets)?);
        let vocabulary: Vec<_> = crate::library::VocabularyCategory::ALL
            .iter()
            .flat_map(|&c| library.vocabulary(c))
            .collect();
        let playlists = Arc::new(assign_playlists(&matrix, &grouping)?.with_vocabulary(&vocabulary));
        let ctx = EnsembleContext::from_library(&library, matrix, playlists);
        let ensemble = Ensemble::new(ensemble, &grouping, seed, ctx, led, sr, hop)?;
        let singer_seeds = std::array::from_fn(|i| ensemble.singers()[i].config.rng_seed);
        let layout = ChannelLayout::default();
        let block = render.block_size;
        Ok(Self {
            sample_rate: sr,
            tick_len,
            sensor_period: u64::from(sr / sensors.cycle_hz),
            snapshot_period: u64::from(sr / SNAPSHOT_RATE_HZ),
            led_period: (f64::from(sr) / led.update_hz).round().max(1.0) as u64,
            next_led: 0,
            clock: 0,
            analyzer,
            hops: Vec::with_capacity(64),
            ensemble,
            cmds: Vec::with_capacity(64),
            sensor_input,
            quantize: sensors.quantize,
            smoother: ReadingSmoother::new(sensors.smoothing, sensors.quantize),
            frame: SensorFrame::empty(0, 0, &sensors.quantize),
            frame_seq: 0,
            library,
            voices: vec![None; SENSOR_COUNT],
            output: OutputStage::new(&render, &layout),
            layout,
            planar: vec![T::zero(); SENSOR_COUNT * block],
            loop_scratch: vec![T::zero(); SENSOR_COUNT * tick_len as usize],
            recorder: LoopRecorder::new(&looper, sr),
            loops: LoopState::new(looper.clone(), sr),
            topology: TopologyTracker::new(&looper),
            cue,
            session: LoopSession { sample_rate: sr, ..Default::default() },
            singer_seeds,
            led,
            led_sink: None,
            trace: None,
            handle: None,
            scheduled: VecDeque::new(),
            last_error: None,
            degraded: false,
            render,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn block_size(&self) -> usize {
        self.render.block_size
    }

    pub fn output_channels(&self) -> usize {
        self.output.channels()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn sensor_frame(&self) -> &SensorFrame {
        &self.frame
    }

    pub fn loop_state(&self) -> &LoopState {
        &self.loops
    }

    pub fn loop_session(&self) -> &LoopSession {
        &self.session
    }

    pub fn render_config(&self) -> &RenderConfig {
        &self.render
    }

    /// Starts keeping a trace of commands, phrases and control events.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn set_led_sink(&mut self, sink: Box<dyn LedSink>) {
        self.led_sink = Some(sink);
    }

    pub fn take_led_sink(&mut self) -> Option<Box<dyn LedSink>> {
        self.led_sink.take()
    }

    /// Connects the command queue and snapshot slot.
    pub fn attach(&mut self, handle: EngineHandle) {
        self.handle = Some(handle);
    }

    /// While degraded, new sample starts are dropped; nothing else changes.
    pub fn set_degraded(&mut self, degraded: bool) {
        self.degraded = degraded;
        self.ensemble.set_suppress_starts(degraded);
    }

    /// Applies `cmd` at the first control tick at or after engine tick `at`.
    pub fn schedule_control(&mut self, at: u64, cmd: ControlCommand) {
        let pos = self.scheduled.partition_point(|(t, _)| *t <= at);
        self.scheduled.insert(pos, (at, cmd));
    }

    /// Processes one block: `input` is mono performer audio, `output`
    /// receives interleaved audio for [`Engine::output_channels`] channels.
    pub fn process_block(&mut self, input: &[T], output: &mut [T]) {
        let n = input.len();
        assert!(n <= self.render.block_size, "block larger than configured");
        assert_eq!(output.len(), n * self.output.channels(), "output size");
        let planar = &mut self.planar[..SENSOR_COUNT * n];
        planar.iter_mut().for_each(|x| *x = T::zero());

        let mut offset = 0;
        while offset < n {
            let t = self.clock + offset as u64;
            if t % self.tick_len == 0 {
                self.control_tick(t);
            }
            let until_tick = (self.tick_len - t % self.tick_len) as usize;
            let end = n.min(offset + until_tick);
            let len = end - offset;

            let chunk = &input[offset..end];
            let hops = &mut self.hops;
            if let Err(e) = self.analyzer.push_samples(chunk, |f| hops.push(f)) {
                log::error!("analysis failed: {e}");
            }
            self.recorder.push(chunk);

            let planar = &mut self.planar[..SENSOR_COUNT * n];
            mix_voices(&mut self.voices, len, planar, offset, n);
            if !self.loops.is_empty() {
                let scratch = &mut self.loop_scratch[..SENSOR_COUNT * len];
                scratch.iter_mut().for_each(|x| *x = T::zero());
                loop_contribution(&self.loops, t, len, scratch);
                for c in 0..SENSOR_COUNT {
                    let dst = &mut planar[c * n + offset..c * n + end];
                    for (y, &x) in dst.iter_mut().zip(&scratch[c * len..(c + 1) * len]) {
                        *y = *y + x;
                    }
                }
            }
            offset = end;
        }
        self.output.write(&self.planar[..SENSOR_COUNT * n], n, output);
        self.clock += n as u64;
    }

    fn record(&mut self, tick: u64, event: TraceEvent) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRecord { tick, event });
        }
    }

    fn control_tick(&mut self, t: u64) {
        while self.scheduled.front().is_some_and(|(at, _)| *at <= t) {
            let (_, cmd) = self.scheduled.pop_front().expect("checked");
            self.control(cmd, t);
        }
        if let Some(handle) = self.handle.clone() {
            while let Some(cmd) = handle.next_command() {
                self.control(cmd, t);
            }
        }
        if t % self.sensor_period == 0 {
            self.read_sensors(t);
        }
        let mut cues = 0;
        for h in &self.hops {
            if self.cue.push(h) {
                cues += 1;
            }
        }
        for _ in 0..cues {
            let cmd = if self.recorder.is_armed() { ControlCommand::DisarmLoop } else { ControlCommand::ArmLoop };
            log::info!("sung cue: {cmd:?}");
            self.control(cmd, t);
        }
        let mut cmds = std::mem::take(&mut self.cmds);
        let phrases = self.ensemble.tick(t, &self.hops, &self.frame, &mut cmds);
        self.hops.clear();
        for p in phrases {
            self.record(t, TraceEvent::Phrase { phrase: p });
        }
        self.execute(t, &mut cmds);
        self.cmds = cmds;
        if t >= self.next_led {
            self.next_led += self.led_period;
            self.write_leds(t);
        }
        if t % self.snapshot_period == 0 {
            if let Some(handle) = &self.handle {
                handle.snapshots.publish(self.snapshot(t));
            }
        }
    }

    fn execute(&mut self, t: u64, cmds: &mut Vec<EnsembleCommand>) {
        for cmd in cmds.drain(..) {
            let i = usize::from(cmd.singer);
            match &cmd.kind {
                CommandKind::Play { sample, gain, .. } => match self.library.audio(sample) {
                    Some(audio) => {
                        self.voices[i] = Some(Voice {
                            audio: audio.clone(),
                            pos: 0,
                            gain: *gain,
                            pan: self.layout.pan(self.layout.angle(self.layout.channel_of_singer(i))),
                        });
                    }
                    None => log::error!("no audio for `{sample}`"),
                },
                CommandKind::Stop => self.voices[i] = None,
                CommandKind::SetLed { .. } => {}
            }
            self.record(t, TraceEvent::Command { command: cmd });
        }
    }

    fn read_sensors(&mut self, t: u64) {
        let raw = match &mut self.sensor_input {
            SensorInput::Silent => SensorFrame::empty(self.frame_seq, t, &self.quantize),
            SensorInput::Simulated { sim, script, rng } => {
                if let Some(script) = script {
                    sim.avatars = script.avatars_at(t as f64 / f64::from(self.sample_rate));
                }
                simulate_sensors(sim, &self.quantize, self.frame_seq, t, rng)
            }
            SensorInput::Shared(latest) => match latest.take() {
                Some(f) => f,
                None => return,
            },
        };
        self.frame_seq += 1;
        self.frame = self.smoother.process(&raw);
        let before = self.topology.topology().chosen_singer;
        self.loops.topology = self.topology.update(&self.frame);
        let after = self.loops.topology.chosen_singer;
        if before != after {
            self.session.record_topology(t, after);
            self.record(t, TraceEvent::Topology { chosen_singer: after });
        }
    }

    fn write_leds(&mut self, t: u64) {
        let Some(sink) = &mut self.led_sink else { return };
        let clock_s = t as f64 / f64::from(self.sample_rate);
        let states: Vec<_> = self
            .ensemble
            .singers()
            .iter()
            .map(|s| state_to_pattern(s.config.singer_id, s.active(), s.bucket(), clock_s, &self.led))
            .collect();
        if let Err(e) = sink.write_frame(&encode_states(&states, self.led.pixels)) {
            log::warn!("led write failed: {e}");
        }
    }

    fn control(&mut self, cmd: ControlCommand, t: u64) {
        self.record(t, TraceEvent::Control { command: cmd.clone() });
        if let Err(message) = self.try_control(cmd, t) {
            log::warn!("control command failed: {message}");
            self.record(t, TraceEvent::ControlError { message: message.clone() });
            self.last_error = Some(message);
        }
    }

    fn try_control(&mut self, cmd: ControlCommand, t: u64) -> Result<(), String> {
        cmd.validate()?;
        match cmd {
            ControlCommand::SetMode { mode } => {
                let mut cmds = std::mem::take(&mut self.cmds);
                self.ensemble.set_mode(mode, t, &mut cmds);
                self.execute(t, &mut cmds);
                self.cmds = cmds;
            }
            ControlCommand::PlaceAvatars { avatars } => match &mut self.sensor_input {
                SensorInput::Simulated { sim, script, .. } => {
                    *script = None;
                    sim.avatars = avatars;
                }
                _ => return Err("avatars can only be placed with simulated sensors".into()),
            },
            ControlCommand::SelectScenarioSet { id } => {
                self.ensemble.select_scenario_set(&id).map_err(|e| e.to_string())?;
            }
            ControlCommand::ArmLoop => self.recorder.arm(t).map_err(|e| e.to_string())?,
            ControlCommand::DisarmLoop => {
                let layer = self.recorder.disarm(t).map_err(|e| e.to_string())?;
                let (id, dur) = (layer.layer_id, layer.duration());
                self.loops.add_layer(layer, &self.singer_seeds).map_err(|e| e.to_string())?;
                let last = self.loops.layers.len() - 1;
                self.session.record_layer(&self.loops.layers[last], &self.loops.choices[last]);
                self.record(t, TraceEvent::LoopLayer { layer_id: id, duration_samples: dur });
            }
            ControlCommand::ClearLoops => {
                self.loops.clear();
                self.recorder.release_all();
            }
            ControlCommand::SetConfigValue { path, value } => {
                let v = value.as_f64().ok_or("not a number")?;
                self.set_value(&path, v)?;
            }
        }
        Ok(())
    }

    fn set_value(&mut self, path: &str, v: f64) -> Result<(), String> {
        let non_negative = |v: f64| if v >= 0.0 { Ok(v) } else { Err(format!("{path} must be non-negative")) };
        match path {
            "render.master_gain" => {
                self.render.master_gain = non_negative(v)?;
                self.output.set_gains(&self.render);
            }
            "ensemble.idle.mean_interval_s" => {
                self.ensemble.set_idle_mean(v).map_err(|e| e.to_string())?;
            }
            "loop.echo_delay_ms" => {
                self.loops.config.echo_delay_ms = non_negative(v)?;
                self.loops.topology.echo_delay_ms = v;
            }
            "loop.echo_gain_decay" => {
                if !(v > 0.0 && v <= 1.0) {
                    return Err("loop.echo_gain_decay must be in (0, 1]".into());
                }
                self.loops.config.echo_gain_decay = v;
                self.loops.topology.echo_gain_decay = v;
            }
            _ => {
                let c: usize = path
                    .strip_prefix("render.trims.")
                    .and_then(|c| c.parse().ok())
                    .filter(|&c| c < SENSOR_COUNT)
                    .ok_or_else(|| format!("`{path}` is not hot-reloadable"))?;
                self.render.trims[c] = non_negative(v)?;
                self.output.set_gains(&self.render);
            }
        }
        self.topology.set_echo(self.loops.config.echo_delay_ms, self.loops.config.echo_gain_decay);
        Ok(())
    }

    pub fn avatars(&self) -> Vec<Avatar> {
        match &self.sensor_input {
            SensorInput::Simulated { sim, .. } => sim.avatars.clone(),
            _ => Vec::new(),
        }
    }

    pub fn snapshot(&self, tick: u64) -> StateSnapshot {
        let metrics = self
            .handle
            .as_ref()
            .map(|h| h.metrics.snapshot(self.ensemble.dropped_starts()))
            .unwrap_or_else(|| crate::control::MetricsSnapshot {
                dropped_starts: self.ensemble.dropped_starts(),
                ..Default::default()
            });
        StateSnapshot {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            tick,
            sample_rate: self.sample_rate,
            mode: self.ensemble.mode(),
            scenario_set: self.ensemble.active_scenario_set().to_owned(),
            singers: self
                .ensemble
                .singers()
                .iter()
                .enumerate()
                .map(|(i, s)| SingerSnapshot {
                    singer_id: s.config.singer_id,
                    voice_part: s.config.voice_part,
                    active: s.active(),
                    sample: s.current().map(|p| p.sample.clone()),
                    bucket: self.frame.reading(i).bucket(),
                    range_mm: self.frame.reading(i).range_mm(),
                    led: s.led(),
                })
                .collect(),
            avatars: self.avatars(),
            loop_state: LoopSummary {
                armed: self.recorder.is_armed(),
                layers: self.loops.layers.len(),
                chosen_singer: self.loops.topology.chosen_singer,
            },
            metrics,
            last_error: self.last_error.clone(),
        }
    }

    pub fn degraded(&self) -> bool {
        self.degraded
    }
}
