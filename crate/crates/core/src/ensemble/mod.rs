//! The sixteen virtual singers: scenario evaluation, call and response,
//! proximity modulation, stereo pairs and installation-mode autonomy.

mod command;
mod config;
mod core;
mod idle;
mod phrase;
mod proximity;
mod scenario;
mod singer;

pub use command::{CommandKind, EnsembleCommand};
pub use config::{EnsembleConfig, IdleConfig};
pub use self::core::{
    provoke, tie_seed, Ensemble, EnsembleContext, GroupEvent, InstallationStats, SingerState,
};
pub use idle::{pick_group, IdleSchedule};
pub use phrase::{PhraseConfig, PhraseSummary, PhraseTracker};
pub use proximity::{ProximityTier, ProximityTiers};
pub use scenario::{default_scenario_sets, Margin, Quantifier, ScenarioAction, ScenarioRule, SensorCondition};
pub use singer::{default_singers, singer_type_presets, Mode, SingerConfig, SingerType};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("invalid config at `{path}`: {reason}")]
    InvalidConfig { path: String, reason: String },
}

impl EnsembleError {
    pub(crate) fn at(path: impl Into<String>, reason: impl Into<String>) -> Self {
        EnsembleError::InvalidConfig {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = EnsembleError> = std::result::Result<T, E>;
