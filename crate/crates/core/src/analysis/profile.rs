//! Calibration of the sing/speak gate from labeled recordings.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    gate_is_singing, AnalysisError, AttackConfig, FrameAnalyzer, GateObservation, GateProfile,
    PitchConfig, Result, GATE_SCHEMA_VERSION,
};
use crate::scalar::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClipLabel {
    Singing,
    Speaking,
    Silence,
}

impl ClipLabel {
    pub const ALL: [ClipLabel; 3] = [ClipLabel::Singing, ClipLabel::Speaking, ClipLabel::Silence];

    pub fn as_str(self) -> &'static str {
        match self {
            ClipLabel::Singing => "singing",
            ClipLabel::Speaking => "speaking",
            ClipLabel::Silence => "silence",
        }
    }
}

impl fmt::Display for ClipLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationClip<T> {
    pub name: String,
    pub label: ClipLabel,
    pub samples: Vec<T>,
    pub sample_rate_hz: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub sample_rate_hz: u32,
    pub window: usize,
    pub hop: usize,
    pub pitch: PitchConfig,
    pub attack: AttackConfig,
    pub band_edges_hz: Vec<f64>,
    /// Absolute widening of each band's observed singing range.
    pub band_margin: f64,
    pub confidence_margin: f64,
    pub volume_margin_db: f64,
    pub min_clip_s: f64,
    pub required_separability: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 48_000,
            window: 2048,
            hop: 512,
            pitch: PitchConfig::default(),
            attack: AttackConfig::default(),
            band_edges_hz: vec![60.0, 300.0, 700.0, 1500.0, 3000.0, 6000.0, 12_000.0, 20_000.0],
            band_margin: 0.05,
            confidence_margin: 0.1,
            volume_margin_db: 6.0,
            min_clip_s: 2.0,
            required_separability: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub hops: BTreeMap<ClipLabel, usize>,
    /// Fraction of singing hops the calibrated gate accepts.
    pub singing_accept_rate: f64,
    /// Per negative label, the fraction of hops the gate rejects.
    pub rejection_rate: BTreeMap<ClipLabel, f64>,
    /// Worst rejection rate over the negative labels.
    pub separability: f64,
}

struct Hop {
    label: ClipLabel,
    pitch_hz: Option<f64>,
    confidence: f64,
    volume: f64,
    bands: Vec<f64>,
}

/// Derives a [`GateProfile`] so that every calibration singing hop lies
/// inside the band-energy bounds, then checks that speaking and silence hops
/// are rejected at the required rate.
pub fn build_voice_profile<T: Sample>(
    clips: &[CalibrationClip<T>],
    config: &CalibrationConfig,
) -> Result<(GateProfile, SeparabilityReport)> {
    for label in ClipLabel::ALL {
        if !clips.iter().any(|c| c.label == label) {
            return Err(AnalysisError::MissingLabel(label));
        }
    }
    let min_len = (config.min_clip_s * f64::from(config.sample_rate_hz)).round() as usize;
    for clip in clips {
        if clip.sample_rate_hz != config.sample_rate_hz {
            return Err(AnalysisError::InvalidInput(format!(
                "clip `{}` is {} Hz, calibration runs at {} Hz",
                clip.name, clip.sample_rate_hz, config.sample_rate_hz
            )));
        }
        if clip.samples.len() < min_len {
            return Err(AnalysisError::InvalidInput(format!(
                "clip `{}` is shorter than {} s",
                clip.name, config.min_clip_s
            )));
        }
    }
    if config.hop == 0 {
        return Err(AnalysisError::InvalidInput("hop must be positive".into()));
    }

    let mut analyzer = FrameAnalyzer::<T>::new(
        config.window,
        config.sample_rate_hz,
        config.pitch,
        &config.attack,
        &config.band_edges_hz,
    )?;
    let mut hops = Vec::new();
    for clip in clips {
        let mut start = 0;
        while start + config.window <= clip.samples.len() {
            let obs = analyzer.analyze(&clip.samples[start..start + config.window])?;
            hops.push(Hop {
                label: clip.label,
                pitch_hz: obs.pitch_hz,
                confidence: obs.pitch_confidence,
                volume: obs.volume_dbfs,
                bands: obs.band_energies.to_vec(),
            });
            start += config.hop;
        }
    }

    let bands = config.band_edges_hz.len() - 1;
    let mut lo = vec![f64::INFINITY; bands];
    let mut hi = vec![f64::NEG_INFINITY; bands];
    let mut min_conf = f64::INFINITY;
    let mut min_vol = f64::INFINITY;
    for hop in hops.iter().filter(|h| h.label == ClipLabel::Singing) {
        for (b, &e) in hop.bands.iter().enumerate() {
            lo[b] = lo[b].min(e);
            hi[b] = hi[b].max(e);
        }
        min_vol = min_vol.min(hop.volume);
        if hop.pitch_hz.is_some() {
            min_conf = min_conf.min(hop.confidence);
        }
    }
    if !min_conf.is_finite() {
        return Err(AnalysisError::InvalidInput(
            "no pitched hops in the singing clips".into(),
        ));
    }
    let profile = GateProfile {
        schema_version: GATE_SCHEMA_VERSION,
        sample_rate_hz: config.sample_rate_hz,
        band_edges_hz: config.band_edges_hz.clone(),
        singing_energy_bounds: lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| {
                (
                    (l - config.band_margin).max(0.0),
                    (h + config.band_margin).min(1.0),
                )
            })
            .collect(),
        min_pitch_confidence: (min_conf - config.confidence_margin).clamp(0.0, 1.0),
        min_volume_dbfs: min_vol - config.volume_margin_db,
    };

    let mut counts: BTreeMap<ClipLabel, usize> = BTreeMap::new();
    let mut accepted: BTreeMap<ClipLabel, usize> = BTreeMap::new();
    for hop in &hops {
        *counts.entry(hop.label).or_default() += 1;
        let obs = GateObservation {
            pitch_hz: hop.pitch_hz,
            pitch_confidence: hop.confidence,
            volume_dbfs: hop.volume,
            band_energies: &hop.bands,
        };
        if gate_is_singing(&obs, &profile) {
            *accepted.entry(hop.label).or_default() += 1;
        }
    }
    let rate = |label: ClipLabel| {
        let n = counts.get(&label).copied().unwrap_or(0);
        let a = accepted.get(&label).copied().unwrap_or(0);
        if n == 0 {
            0.0
        } else {
            a as f64 / n as f64
        }
    };
    let rejection_rate: BTreeMap<ClipLabel, f64> = [ClipLabel::Speaking, ClipLabel::Silence]
        .into_iter()
        .map(|l| (l, 1.0 - rate(l)))
        .collect();
    let separability = rejection_rate.values().copied().fold(1.0, f64::min);
    let singing_accept_rate = rate(ClipLabel::Singing);
    let report = SeparabilityReport {
        hops: counts,
        singing_accept_rate,
        rejection_rate,
        separability,
    };
    if separability < config.required_separability {
        return Err(AnalysisError::CalibrationFailed {
            achieved: separability,
            required: config.required_separability,
            report: Box::new(report),
        });
    }
    Ok((profile, report))
}
