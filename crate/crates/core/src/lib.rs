//! Core of the ansambl installation: voice analysis, the sample library,
//! sensor input, the ensemble logic, the looper, spatial rendering and LED
//! control.
//!
//! Numeric code is generic over [`Sample`]; the aliases below fix the
//! scalar type for the common cases.

pub mod analysis;
pub mod audio_io;
pub mod config;
pub mod control;
pub mod ensemble;
pub mod led;
pub mod library;
pub mod looper;
pub mod render;
pub mod rng;
pub mod scalar;
pub mod sensors;
pub mod synth;

pub use scalar::Sample;

pub type StreamAnalyzer32 = analysis::StreamAnalyzer<f32>;
pub type StreamAnalyzer64 = analysis::StreamAnalyzer<f64>;
pub type PitchDetector32 = analysis::PitchDetector<f32>;
pub type PitchDetector64 = analysis::PitchDetector<f64>;
