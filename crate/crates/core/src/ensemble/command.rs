use serde::{Deserialize, Serialize};

use super::ProximityTier;
use crate::led::LedPattern;
use crate::library::{SampleId, Technique};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command")]
pub enum CommandKind {
    Play {
        sample: SampleId,
        gain: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        technique_override: Option<Technique>,
        tier: ProximityTier,
        /// Set on the complementary half of a stereo pair.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        partner_of: Option<u8>,
    },
    Stop,
    SetLed {
        pattern: LedPattern,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCommand {
    pub singer: u8,
    #[serde(flatten)]
    pub kind: CommandKind,
}

impl EnsembleCommand {
    pub fn is_play(&self) -> bool {
        matches!(self.kind, CommandKind::Play { .. })
    }

    pub fn sample(&self) -> Option<&SampleId> {
        match &self.kind {
            CommandKind::Play { sample, .. } => Some(sample),
            _ => None,
        }
    }
}
