//! Proximity sensing: the ultrasonic serial protocol, a geometric audience
//! simulator and reading smoothing.

mod maxsonar;
mod reading;
mod sim;
mod smooth;
mod transport;

pub use maxsonar::{encode_maxsonar, MaxSonarParser};
pub use reading::{quantize_mm_to_bucket, QuantizeConfig, SensorFrame, SensorReading, SENSOR_COUNT};
pub use sim::{simulate_sensors, AudienceSimState, Avatar, AvatarScript, AvatarKeyframe};
pub use smooth::{ReadingSmoother, SmoothingConfig};
pub use transport::{encode_tagged, spawn_tagged_reader, FrameAssembler, LatestFrame, TaggedParser, TAG_SYNC};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SensorError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = SensorError> = std::result::Result<T, E>;
