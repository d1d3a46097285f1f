//! Performer-voice analysis: pitch, volume, attack and the sing/speak gate.

mod attack;
mod features;
mod frame;
mod gate;
mod pitch;
mod profile;
mod spectrum;
mod stream;
mod volume;

pub use attack::{classify_attack, AttackClass, AttackConfig};
pub use features::{FeatureQueue, VocalFeatures};
pub use frame::{AudioFrame, FrameAnalyzer, HopObservation};
pub use gate::{gate_is_singing, GateObservation, GateProfile, GATE_SCHEMA_VERSION};
pub use pitch::{detect_pitch, PitchConfig, PitchDetector, PitchEstimate, PitchRange};
pub use profile::{
    build_voice_profile, CalibrationClip, CalibrationConfig, ClipLabel, SeparabilityReport,
};
pub use spectrum::SpectrumAnalyzer;
pub use stream::{AnalysisConfig, StreamAnalyzer};
pub use volume::{measure_volume, SILENCE_FLOOR_DBFS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("frame too short: {len} samples, at least {required} needed")]
    FrameTooShort { len: usize, required: usize },
    #[error("calibration clips missing label `{0}`")]
    MissingLabel(ClipLabel),
    #[error("calibration failed: separability {achieved:.3} below required {required:.2}")]
    CalibrationFailed {
        achieved: f64,
        required: f64,
        report: Box<SeparabilityReport>,
    },
    #[error("sample rate changed mid-stream from {from} Hz to {to} Hz")]
    SampleRateChanged { from: u32, to: u32 },
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;
