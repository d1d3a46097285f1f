use serde::{Deserialize, Serialize};

use super::frame::validate_band_edges;
use super::{AnalysisError, Result};

pub const GATE_SCHEMA_VERSION: u32 = 1;

/// Calibrated sing/speak gate thresholds, persisted as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateProfile {
    pub schema_version: u32,
    pub sample_rate_hz: u32,
    pub band_edges_hz: Vec<f64>,
    /// Allowed normalized energy per band, `(min, max)`.
    pub singing_energy_bounds: Vec<(f64, f64)>,
    pub min_pitch_confidence: f64,
    pub min_volume_dbfs: f64,
}

impl GateProfile {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != GATE_SCHEMA_VERSION {
            return Err(AnalysisError::InvalidInput(format!(
                "unsupported gate profile schema_version {}",
                self.schema_version
            )));
        }
        validate_band_edges(&self.band_edges_hz, self.sample_rate_hz)?;
        if self.singing_energy_bounds.len() + 1 != self.band_edges_hz.len() {
            return Err(AnalysisError::InvalidInput(
                "one energy bound is required per band".into(),
            ));
        }
        if let Some(i) = self
            .singing_energy_bounds
            .iter()
            .position(|(lo, hi)| !(lo <= hi))
        {
            return Err(AnalysisError::InvalidInput(format!("band {i} has min > max")));
        }
        if !(0.0..=1.0).contains(&self.min_pitch_confidence) {
            return Err(AnalysisError::InvalidInput(
                "min_pitch_confidence must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let profile: Self = serde_json::from_str(text)
            .map_err(|e| AnalysisError::InvalidInput(format!("gate profile: {e}")))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }
}

/// Inputs to the gate for one hop.
#[derive(Debug, Clone, Copy)]
pub struct GateObservation<'a> {
    pub pitch_hz: Option<f64>,
    pub pitch_confidence: f64,
    pub volume_dbfs: f64,
    pub band_energies: &'a [f64],
}

pub fn gate_is_singing(obs: &GateObservation<'_>, profile: &GateProfile) -> bool {
    obs.pitch_hz.is_some()
        && obs.pitch_confidence >= profile.min_pitch_confidence
        && obs.volume_dbfs >= profile.min_volume_dbfs
        && obs.band_energies.len() == profile.singing_energy_bounds.len()
        && obs
            .band_energies
            .iter()
            .zip(&profile.singing_energy_bounds)
            .all(|(e, (lo, hi))| e >= lo && e <= hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> GateProfile {
        GateProfile {
            schema_version: 1,
            sample_rate_hz: 48_000,
            band_edges_hz: vec![100.0, 1000.0, 8000.0],
            singing_energy_bounds: vec![(0.5, 1.0), (0.0, 0.3)],
            min_pitch_confidence: 0.8,
            min_volume_dbfs: -50.0,
        }
    }

    #[test]
    fn conjunction_of_all_conditions() {
        let p = profile();
        let ok = GateObservation {
            pitch_hz: Some(220.0),
            pitch_confidence: 0.95,
            volume_dbfs: -20.0,
            band_energies: &[0.9, 0.05],
        };
        assert!(gate_is_singing(&ok, &p));
        assert!(!gate_is_singing(&GateObservation { pitch_hz: None, ..ok }, &p));
        assert!(!gate_is_singing(&GateObservation { pitch_confidence: 0.7, ..ok }, &p));
        assert!(!gate_is_singing(&GateObservation { volume_dbfs: -120.0, ..ok }, &p));
        assert!(!gate_is_singing(&GateObservation { band_energies: &[0.4, 0.5], ..ok }, &p));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = profile();
        assert_eq!(GateProfile::from_json(&p.to_json()).unwrap(), p);
        let mut bad = p.clone();
        bad.singing_energy_bounds[0] = (0.9, 0.1);
        assert!(bad.validate().is_err());
        let mut bad = p;
        bad.schema_version = 9;
        assert!(bad.validate().is_err());
    }
}
