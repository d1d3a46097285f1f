use super::{
    AnalysisError, AttackConfig, PitchConfig, PitchDetector, PitchEstimate, Result,
    SpectrumAnalyzer, SILENCE_FLOOR_DBFS,
};
use crate::analysis::volume::rms;
use crate::scalar::{amplitude_to_db, Sample};

/// A block of mono performer audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFrame<T> {
    samples: Vec<T>,
    sample_rate_hz: u32,
    start_time: u64,
}

impl<T: Sample> AudioFrame<T> {
    pub fn new(samples: Vec<T>, sample_rate_hz: u32, start_time: u64) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(AnalysisError::InvalidInput("sample rate must be positive".into()));
        }
        if let Some(pos) = samples
            .iter()
            .position(|s| !(s.abs() <= T::one()))
        {
            return Err(AnalysisError::InvalidInput(format!(
                "sample {pos} outside [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            start_time,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn start_time(&self) -> u64 {
        self.start_time
    }
}

/// Everything measured on one analysis window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopObservation<'a> {
    pub pitch_hz: Option<f64>,
    pub pitch_confidence: f64,
    pub volume_dbfs: f64,
    pub attack_band_db: f64,
    pub band_energies: &'a [f64],
}

/// Per-window measurement shared by the streaming analyzer and calibration.
pub struct FrameAnalyzer<T: Sample> {
    pitch: PitchDetector<T>,
    spectrum: SpectrumAnalyzer<T>,
    band_edges: Vec<f64>,
    attack_band: (f64, f64),
    fractions: Vec<T>,
    fractions_f64: Vec<f64>,
}

impl<T: Sample> FrameAnalyzer<T> {
    pub fn new(
        window: usize,
        sample_rate: u32,
        pitch: PitchConfig,
        attack: &AttackConfig,
        band_edges: &[f64],
    ) -> Result<Self> {
        validate_band_edges(band_edges, sample_rate)?;
        attack.validate()?;
        Ok(Self {
            pitch: PitchDetector::new(window, sample_rate, pitch)?,
            spectrum: SpectrumAnalyzer::new(window, sample_rate),
            band_edges: band_edges.to_vec(),
            attack_band: (attack.band_low_hz, attack.band_high_hz),
            fractions: vec![T::zero(); band_edges.len() - 1],
            fractions_f64: vec![0.0; band_edges.len() - 1],
        })
    }

    pub fn window(&self) -> usize {
        self.pitch.window()
    }

    pub fn analyze(&mut self, window: &[T]) -> Result<HopObservation<'_>> {
        let PitchEstimate {
            frequency_hz,
            confidence,
        } = self.pitch.detect(window)?;
        let volume = amplitude_to_db(rms(window), T::lit(SILENCE_FLOOR_DBFS));
        self.spectrum.process(window);
        self.spectrum.band_fractions(&self.band_edges, &mut self.fractions);
        for (dst, src) in self.fractions_f64.iter_mut().zip(&self.fractions) {
            *dst = src.as_f64();
        }
        let attack_db = self.spectrum.band_level_db(
            self.attack_band.0,
            self.attack_band.1,
            T::lit(SILENCE_FLOOR_DBFS),
        );
        Ok(HopObservation {
            pitch_hz: frequency_hz.map(Sample::as_f64),
            pitch_confidence: confidence.as_f64(),
            volume_dbfs: volume.as_f64(),
            attack_band_db: attack_db.as_f64(),
            band_energies: &self.fractions_f64,
        })
    }
}

pub(crate) fn validate_band_edges(edges: &[f64], sample_rate: u32) -> Result<()> {
    let nyquist = f64::from(sample_rate) / 2.0;
    if edges.len() < 2 {
        return Err(AnalysisError::InvalidInput("need at least two band edges".into()));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(AnalysisError::InvalidInput("band edges must be strictly increasing".into()));
    }
    if !(edges[0] > 0.0 && edges[edges.len() - 1] < nyquist) {
        return Err(AnalysisError::InvalidInput(format!(
            "band edges must lie inside (0, {nyquist}) Hz"
        )));
    }
    Ok(())
}
