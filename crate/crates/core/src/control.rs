//! Operator commands into the engine and state snapshots out of it.
//!
//! The engine is the only writer of the snapshot slot and the only reader
//! of the command queue; both are safe to touch from any thread.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crossbeam_queue::ArrayQueue;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::ensemble::Mode;
use crate::led::LedPattern;
use crate::library::{SampleId, VoicePart};
use crate::sensors::Avatar;

pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;
pub const CONTROL_SCHEMA_VERSION: u32 = 1;

/// Settings that may change while the engine runs.
pub const HOT_RELOADABLE: &[&str] = &[
    "render.master_gain",
    "render.trims.<channel>",
    "ensemble.idle.mean_interval_s",
    "loop.echo_delay_ms",
    "loop.echo_gain_decay",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlCommand {
    SetMode { mode: Mode },
    PlaceAvatars { avatars: Vec<Avatar> },
    SelectScenarioSet { id: String },
    ArmLoop,
    DisarmLoop,
    ClearLoops,
    SetConfigValue { path: String, value: serde_json::Value },
}

impl ControlCommand {
    /// Parses and checks a command without touching the engine.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let cmd: ControlCommand = serde_json::from_value(raw.clone()).map_err(|e| e.to_string())?;
        // serde ignores extra fields on unit variants of a tagged enum
        let known = serde_json::to_value(&cmd).map_err(|e| e.to_string())?;
        if let (Some(given), Some(known)) = (raw.as_object(), known.as_object()) {
            if let Some(extra) = given.keys().find(|k| !known.contains_key(*k)) {
                return Err(format!("unknown field `{extra}`"));
            }
        }
        cmd.validate()?;
        Ok(cmd)
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            ControlCommand::PlaceAvatars { avatars } => {
                if avatars.iter().any(|a| !(a.x_m.is_finite() && a.y_m.is_finite())) {
                    return Err("avatar coordinates must be finite".into());
                }
            }
            ControlCommand::SetConfigValue { path, value } => {
                let known = HOT_RELOADABLE.iter().any(|p| match p.strip_suffix("<channel>") {
                    Some(prefix) => path
                        .strip_prefix(prefix)
                        .and_then(|c| c.parse::<usize>().ok())
                        .is_some_and(|c| c < 16),
                    None => p == path,
                });
                if !known {
                    return Err(format!(
                        "`{path}` is not hot-reloadable (allowed: {})",
                        HOT_RELOADABLE.join(", ")
                    ));
                }
                if !value.as_f64().is_some_and(f64::is_finite) {
                    return Err(format!("`{path}` needs a number"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingerSnapshot {
    pub singer_id: u8,
    pub voice_part: VoicePart,
    pub active: bool,
    pub sample: Option<SampleId>,
    pub bucket: u8,
    pub range_mm: u32,
    pub led: LedPattern,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopSummary {
    pub armed: bool,
    pub layers: usize,
    pub chosen_singer: Option<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub blocks: u64,
    pub missed_deadlines: u64,
    pub dropped_starts: u64,
    pub malformed_sensor_bytes: u64,
    pub mean_block_us: f64,
    pub max_block_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub schema_version: u32,
    /// Engine clock in samples.
    pub tick: u64,
    pub sample_rate: u32,
    pub mode: Mode,
    pub scenario_set: String,
    pub singers: Vec<SingerSnapshot>,
    pub avatars: Vec<Avatar>,
    #[serde(rename = "loop")]
    pub loop_state: LoopSummary,
    pub metrics: MetricsSnapshot,
    pub last_error: Option<String>,
}

impl StateSnapshot {
    pub fn check(&self) -> Result<(), String> {
        if self.singers.len() != 16 {
            return Err(format!("{} singers", self.singers.len()));
        }
        if self.loop_state.chosen_singer.is_some_and(|c| c >= 16) {
            return Err("chosen singer out of range".into());
        }
        for (i, s) in self.singers.iter().enumerate() {
            if usize::from(s.singer_id) != i || !(1..=10).contains(&s.bucket) {
                return Err(format!("singer {i} inconsistent"));
            }
            if s.active != s.sample.is_some() || s.active == s.led.is_off() {
                return Err(format!("singer {i} activity inconsistent"));
            }
        }
        Ok(())
    }
}

/// Latest-value cell. The writer never waits: if a reader holds the lock
/// the publish is skipped and the next one wins.
#[derive(Debug, Default)]
pub struct SnapshotSlot {
    latest: Mutex<Option<Arc<StateSnapshot>>>,
}

impl SnapshotSlot {
    pub fn publish(&self, snapshot: StateSnapshot) -> bool {
        match self.latest.try_lock() {
            Some(mut g) => {
                *g = Some(Arc::new(snapshot));
                true
            }
            None => false,
        }
    }

    pub fn latest(&self) -> Option<Arc<StateSnapshot>> {
        self.latest.lock().clone()
    }
}

/// Counters shared between the audio runner, the sensor thread and the engine.
#[derive(Debug, Default)]
pub struct RuntimeMetrics {
    pub blocks: AtomicU64,
    pub missed_deadlines: AtomicU64,
    pub block_time_us_total: AtomicU64,
    pub block_time_us_max: AtomicU64,
    pub malformed_sensor_bytes: AtomicU64,
}

impl RuntimeMetrics {
    pub fn record_block(&self, elapsed_us: u64, missed: bool) {
        self.blocks.fetch_add(1, Ordering::Relaxed);
        self.block_time_us_total.fetch_add(elapsed_us, Ordering::Relaxed);
        self.block_time_us_max.fetch_max(elapsed_us, Ordering::Relaxed);
        if missed {
            self.missed_deadlines.fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn snapshot(&self, dropped_starts: u64) -> MetricsSnapshot {
        let blocks = self.blocks.load(Ordering::Relaxed);
        let total = self.block_time_us_total.load(Ordering::Relaxed);
        MetricsSnapshot {
            blocks,
            missed_deadlines: self.missed_deadlines.load(Ordering::Relaxed),
            dropped_starts,
            malformed_sensor_bytes: self.malformed_sensor_bytes.load(Ordering::Relaxed),
            mean_block_us: if blocks == 0 { 0.0 } else { total as f64 / blocks as f64 },
            max_block_us: self.block_time_us_max.load(Ordering::Relaxed),
        }
    }
}

/// What the engine shares with the outside world.
#[derive(Debug)]
pub struct EngineShared {
    commands: ArrayQueue<ControlCommand>,
    pub snapshots: SnapshotSlot,
    pub metrics: RuntimeMetrics,
}

pub type EngineHandle = Arc<EngineShared>;

impl EngineShared {
    pub fn new(queue_len: usize) -> EngineHandle {
        Arc::new(Self {
            commands: ArrayQueue::new(queue_len),
            snapshots: SnapshotSlot::default(),
            metrics: RuntimeMetrics::default(),
        })
    }

    /// Queues a command for the next control tick; a full queue rejects it.
    pub fn send(&self, cmd: ControlCommand) -> Result<(), ControlCommand> {
        self.commands.push(cmd)
    }

    pub fn next_command(&self) -> Option<ControlCommand> {
        self.commands.pop()
    }
}
