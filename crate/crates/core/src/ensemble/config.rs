use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::singer::validate_singers;
use super::{
    default_scenario_sets, singer_type_presets, EnsembleError, Mode, PhraseConfig,
    ProximityTiers, Result, ScenarioRule, SingerConfig, SingerType,
};
use crate::library::VocabularyCategory;

/// Installation-mode vocabulary scheduling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdleConfig {
    /// Mean time between idle opportunities per singer.
    pub mean_interval_s: f64,
    pub weights: BTreeMap<VocabularyCategory, f64>,
    /// Chance that a warm-up grows into a duet or triplet.
    pub group_probability: f64,
    /// Share of such groups that are triplets.
    pub triplet_probability: f64,
    /// Offset between the entries of a duet or triplet.
    pub stagger_s: f64,
    /// Nearest bucket that counts as provoking a singer.
    pub provocation_bucket: u8,
}

impl Default for IdleConfig {
    fn default() -> Self {
        Self {
            mean_interval_s: 45.0,
            weights: [
                (VocabularyCategory::Breathing, 1.0),
                (VocabularyCategory::WarmUp, 1.0),
                (VocabularyCategory::Chatter, 1.0),
                (VocabularyCategory::Laughter, 1.0),
            ]
            .into_iter()
            .collect(),
            group_probability: 0.3,
            triplet_probability: 0.4,
            stagger_s: 1.0,
            provocation_bucket: 3,
        }
    }
}

impl IdleConfig {
    pub fn validate(&self) -> Result<()> {
        let p = "ensemble.idle";
        if !(self.mean_interval_s > 0.0 && self.mean_interval_s.is_finite()) {
            return Err(EnsembleError::at(format!("{p}.mean_interval_s"), "must be positive"));
        }
        if self.weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(EnsembleError::at(format!("{p}.weights"), "weights must be non-negative"));
        }
        for (name, v) in [
            ("group_probability", self.group_probability),
            ("triplet_probability", self.triplet_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(EnsembleError::at(format!("{p}.{name}"), format!("{v} is outside [0, 1]")));
            }
        }
        if !(self.stagger_s >= 0.0) {
            return Err(EnsembleError::at(format!("{p}.stagger_s"), "must be non-negative"));
        }
        if !(1..=10).contains(&self.provocation_bucket) {
            return Err(EnsembleError::at(format!("{p}.provocation_bucket"), "must be in 1..=10"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub mode: Mode,
    /// Left empty, singers are derived from the grouping and the master seed.
    pub singers: Vec<SingerConfig>,
    pub singer_types: BTreeMap<String, SingerType>,
    pub scenario_sets: BTreeMap<String, Vec<ScenarioRule>>,
    pub active_scenario_set: String,
    pub proximity: ProximityTiers,
    pub phrase: PhraseConfig,
    pub idle: IdleConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Live,
            singers: Vec::new(),
            singer_types: singer_type_presets(),
            scenario_sets: default_scenario_sets(),
            active_scenario_set: "default".into(),
            proximity: ProximityTiers::default(),
            phrase: PhraseConfig::default(),
            idle: IdleConfig::default(),
        }
    }
}

impl EnsembleConfig {
    /// Checks everything except `singers`, which may still be empty.
    pub fn validate(&self) -> Result<()> {
        for (name, t) in &self.singer_types {
            t.validate(&format!("ensemble.singer_types.{name}"))?;
        }
        for (name, rules) in &self.scenario_sets {
            for (i, r) in rules.iter().enumerate() {
                r.validate(&format!("ensemble.scenario_sets.{name}[{i}]"))?;
            }
        }
        if !self.scenario_sets.contains_key(&self.active_scenario_set) {
            return Err(EnsembleError::at(
                "ensemble.active_scenario_set",
                format!("no scenario set `{}`", self.active_scenario_set),
            ));
        }
        self.proximity.validate()?;
        if self.phrase.offset_hops == 0 {
            return Err(EnsembleError::at("ensemble.phrase.offset_hops", "must be positive"));
        }
        self.idle.validate()?;
        if !self.singers.is_empty() {
            validate_singers(&self.singers, &self.singer_types)?;
        }
        Ok(())
    }
}
