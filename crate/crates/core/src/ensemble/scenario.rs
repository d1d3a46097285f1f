use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EnsembleError, Mode, PhraseSummary, Result};
use crate::analysis::AttackClass;
use crate::library::VoicePart;
use crate::sensors::SensorFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub min: f64,
    pub max: f64,
}

impl Margin {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantifier {
    #[default]
    All,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorCondition {
    #[serde(default = "one")]
    pub min_bucket: u8,
    #[serde(default = "ten")]
    pub max_bucket: u8,
    #[serde(default)]
    pub quantifier: Quantifier,
}

fn one() -> u8 {
    1
}

fn ten() -> u8 {
    10
}

fn yes() -> bool {
    true
}

impl SensorCondition {
    pub fn holds(&self, frame: &SensorFrame) -> bool {
        let inside = |b: u8| b >= self.min_bucket && b <= self.max_bucket;
        let mut buckets = frame.readings().iter().map(|r| r.bucket());
        match self.quantifier {
            Quantifier::All => buckets.all(inside),
            Quantifier::Any => buckets.any(inside),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScenarioAction {
    RespondAll,
    RespondGroup { part: VoicePart },
    /// The singer nearest the audience answers, mirrored by its stereo partner.
    RespondPair,
    IdleVocabulary,
}

impl ScenarioAction {
    pub fn needs_phrase(self) -> bool {
        !matches!(self, ScenarioAction::IdleVocabulary)
    }
}

/// One entry of a scenario table. Rules are tried in order and the first
/// one that matches drives the tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRule {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_hz: Option<Margin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_dbfs: Option<Margin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_s: Option<Margin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<Vec<AttackClass>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensors: Option<SensorCondition>,
    pub action: ScenarioAction,
    #[serde(default = "yes")]
    pub proximity_modulate: bool,
    #[serde(default)]
    pub pair_sync: bool,
}

impl ScenarioRule {
    pub fn new(id: &str, action: ScenarioAction) -> Self {
        Self {
            id: id.into(),
            mode: None,
            pitch_hz: None,
            volume_dbfs: None,
            length_s: None,
            attack: None,
            sensors: None,
            action,
            proximity_modulate: true,
            pair_sync: false,
        }
    }

    fn has_feature_margins(&self) -> bool {
        self.pitch_hz.is_some()
            || self.volume_dbfs.is_some()
            || self.length_s.is_some()
            || self.attack.is_some()
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for (name, m) in [
            ("pitch_hz", self.pitch_hz),
            ("volume_dbfs", self.volume_dbfs),
            ("length_s", self.length_s),
        ] {
            if let Some(m) = m {
                if !(m.min <= m.max) {
                    return Err(EnsembleError::at(
                        format!("{path}.{name}"),
                        format!("min {} exceeds max {}", m.min, m.max),
                    ));
                }
            }
        }
        if let Some(s) = self.sensors {
            if !(1 <= s.min_bucket && s.min_bucket <= s.max_bucket && s.max_bucket <= 10) {
                return Err(EnsembleError::at(
                    format!("{path}.sensors"),
                    "need 1 <= min_bucket <= max_bucket <= 10",
                ));
            }
        }
        Ok(())
    }

    pub fn matches(&self, phrase: Option<&PhraseSummary>, frame: &SensorFrame, mode: Mode) -> bool {
        if self.mode.is_some_and(|m| m != mode) {
            return false;
        }
        if self.sensors.is_some_and(|s| !s.holds(frame)) {
            return false;
        }
        let Some(p) = phrase else {
            return !self.action.needs_phrase() && !self.has_feature_margins();
        };
        if !self.action.needs_phrase() {
            return false;
        }
        self.pitch_hz.is_none_or(|m| m.contains(p.pitch_hz))
            && self.volume_dbfs.is_none_or(|m| m.contains(p.volume_dbfs))
            && self.length_s.is_none_or(|m| m.contains(p.length_s))
            && self.attack.as_ref().is_none_or(|a| a.contains(&p.attack))
    }
}

/// Built-in scenario tables.
///
/// `default` answers every sung phrase with all sixteen singers in live mode
/// and falls back to autonomy in installation mode. `pairs` answers with the
/// nearest stereo pair, `groups` splits low and high phrases between the
/// voice groups, and `silent` leaves only the looper audible.
pub fn default_scenario_sets() -> BTreeMap<String, Vec<ScenarioRule>> {
    let live = |id: &str, action| ScenarioRule {
        mode: Some(Mode::Live),
        pitch_hz: Some(Margin { min: 60.0, max: 1500.0 }),
        ..ScenarioRule::new(id, action)
    };
    let idle = ScenarioRule {
        mode: Some(Mode::Installation),
        ..ScenarioRule::new("installation-idle", ScenarioAction::IdleVocabulary)
    };
    let mut sets = BTreeMap::new();
    sets.insert(
        "default".to_string(),
        vec![live("call-and-response", ScenarioAction::RespondAll), idle.clone()],
    );
    sets.insert(
        "pairs".to_string(),
        vec![
            ScenarioRule {
                pair_sync: true,
                ..live("nearest-pair", ScenarioAction::RespondPair)
            },
            idle.clone(),
        ],
    );
    sets.insert(
        "groups".to_string(),
        vec![
            ScenarioRule {
                pitch_hz: Some(Margin { min: 60.0, max: 300.0 }),
                ..live("low-second", ScenarioAction::RespondGroup { part: VoicePart::Second })
            },
            ScenarioRule {
                pitch_hz: Some(Margin { min: 300.0, max: 1500.0 }),
                ..live("high-first", ScenarioAction::RespondGroup { part: VoicePart::First })
            },
            idle,
        ],
    );
    sets.insert("silent".to_string(), Vec::new());
    sets
}
