//! Sixteen-channel mixing, the engine that drives every module per block,
//! and the offline and real-time runners around it.

mod engine;
mod layout;
mod mix;
mod offline;
mod realtime;

pub use engine::{
    Engine, EngineParts, SensorInput, SensorTiming, TraceEvent, TraceRecord, CONTROL_RATE_HZ,
    SNAPSHOT_RATE_HZ,
};
pub use layout::{pan_between, stereo_fold, ChannelLayout};
pub use mix::{mix_voices, OutputStage, RenderConfig, Voice};
pub use offline::{read_trace, render_offline, write_trace, ControlScript, OfflineOutput, TimedControl};
pub use realtime::{run_realtime, AudioDevice, RealtimeOptions, RunReport, VirtualDevice};

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error(transparent)]
    Library(#[from] crate::library::LibraryError),
    #[error(transparent)]
    Ensemble(#[from] crate::ensemble::EnsembleError),
    #[error(transparent)]
    Sensors(#[from] crate::sensors::SensorError),
    #[error(transparent)]
    Loop(#[from] crate::looper::LoopError),
    #[error("audio device: {0}")]
    Device(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
