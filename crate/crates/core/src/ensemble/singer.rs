use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EnsembleError, Result};
use crate::library::{GroupingConfig, VoicePart};
use crate::rng::derive_seed;
use crate::sensors::SENSOR_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Live,
    Installation,
}

/// Behaviour preset shared by several singers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingerType {
    pub name: String,
    /// Chance of acting on each idle opportunity.
    pub activity_level: f64,
    /// Chance of answering when provoked by a nearby listener.
    pub interaction_likelihood: f64,
    /// Affinity towards each singer, used when choosing duet partners.
    #[serde(default = "uniform_bias")]
    pub relation_bias: Vec<f64>,
}

fn uniform_bias() -> Vec<f64> {
    vec![1.0; SENSOR_COUNT]
}

impl SingerType {
    pub fn new(name: &str, activity_level: f64, interaction_likelihood: f64) -> Self {
        Self {
            name: name.into(),
            activity_level,
            interaction_likelihood,
            relation_bias: uniform_bias(),
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for (field, v) in [
            ("activity_level", self.activity_level),
            ("interaction_likelihood", self.interaction_likelihood),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(EnsembleError::at(format!("{path}.{field}"), format!("{v} is outside [0, 1]")));
            }
        }
        if self.relation_bias.len() != SENSOR_COUNT {
            return Err(EnsembleError::at(
                format!("{path}.relation_bias"),
                format!("needs {SENSOR_COUNT} weights"),
            ));
        }
        if self.relation_bias.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(EnsembleError::at(format!("{path}.relation_bias"), "weights must be non-negative"));
        }
        Ok(())
    }
}

/// The four built-in types.
pub fn singer_type_presets() -> BTreeMap<String, SingerType> {
    [
        SingerType::new("placid", 0.4, 0.4),
        SingerType::new("eager", 0.9, 0.85),
        SingerType::new("shy", 0.2, 0.25),
        SingerType::new("leader", 0.7, 0.95),
    ]
    .into_iter()
    .map(|t| (t.name.clone(), t))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingerConfig {
    pub singer_id: u8,
    pub voice_part: VoicePart,
    pub pair_id: u8,
    /// Key into the singer type table.
    pub singer_type: String,
    pub rng_seed: u64,
}

/// Pairs are neighbours `2k, 2k+1` inside each voice group; types cycle
/// through the presets.
pub fn default_singers(grouping: &GroupingConfig, master_seed: u64) -> Vec<SingerConfig> {
    const TYPES: [&str; 4] = ["placid", "eager", "shy", "leader"];
    let mut pair = [0u8; SENSOR_COUNT];
    for part in VoicePart::ALL {
        let members = grouping.group(*part);
        for chunk in members.chunks(2) {
            if let [a, b] = chunk {
                pair[*a] = *b as u8;
                pair[*b] = *a as u8;
            }
        }
    }
    (0..SENSOR_COUNT)
        .map(|i| SingerConfig {
            singer_id: i as u8,
            voice_part: grouping.part_of(i),
            pair_id: pair[i],
            singer_type: TYPES[i % TYPES.len()].into(),
            rng_seed: derive_seed(master_seed, i as u64),
        })
        .collect()
}

pub(crate) fn validate_singers(
    singers: &[SingerConfig],
    types: &BTreeMap<String, SingerType>,
) -> Result<()> {
    if singers.len() != SENSOR_COUNT {
        return Err(EnsembleError::at("ensemble.singers", format!("needs exactly {SENSOR_COUNT} singers, got {}", singers.len())));
    }
    for (i, s) in singers.iter().enumerate() {
        let path = format!("ensemble.singers[{i}]");
        if usize::from(s.singer_id) != i {
            return Err(EnsembleError::at(format!("{path}.singer_id"), format!("expected {i}")));
        }
        let p = usize::from(s.pair_id);
        if p >= SENSOR_COUNT || p == i {
            return Err(EnsembleError::at(format!("{path}.pair_id"), "must name another singer"));
        }
        if usize::from(singers[p].pair_id) != i {
            return Err(EnsembleError::at(
                format!("{path}.pair_id"),
                format!("pairing is not symmetric: {i} -> {p} -> {}", singers[p].pair_id),
            ));
        }
        if singers[p].voice_part != s.voice_part {
            return Err(EnsembleError::at(format!("{path}.pair_id"), "partners must share a voice part"));
        }
        if !types.contains_key(&s.singer_type) {
            return Err(EnsembleError::at(
                format!("{path}.singer_type"),
                format!("unknown singer type `{}`", s.singer_type),
            ));
        }
    }
    let first = singers.iter().filter(|s| s.voice_part == VoicePart::First).count();
    if first != SENSOR_COUNT / 2 {
        return Err(EnsembleError::at(
            "ensemble.singers",
            format!("voice parts must split 8/8, got {first}/{}", SENSOR_COUNT - first),
        ));
    }
    Ok(())
}
