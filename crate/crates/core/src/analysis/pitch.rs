//! Monophonic pitch detection with the YIN difference function.
//!
//! The lag-domain difference function is computed from an FFT
//! cross-correlation plus running energy sums, then normalized by its
//! cumulative mean. The first dip under the absolute threshold is refined
//! with parabolic interpolation. All buffers are allocated once in
//! [`PitchDetector::new`]; [`PitchDetector::detect`] does not allocate.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{AnalysisError, Result};
use crate::scalar::Sample;

/// Range of fundamentals the detector reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitchRange {
    pub min_hz: f64,
    pub max_hz: f64,
}

impl Default for PitchRange {
    fn default() -> Self {
        Self {
            min_hz: 60.0,
            max_hz: 1500.0,
        }
    }
}

impl PitchRange {
    pub fn contains(&self, hz: f64) -> bool {
        hz >= self.min_hz && hz <= self.max_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchConfig {
    pub range: PitchRange,
    /// Absolute threshold on the normalized difference function.
    pub yin_threshold: f64,
    /// Estimates below this confidence are reported as unpitched.
    pub min_confidence: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            range: PitchRange::default(),
            yin_threshold: 0.15,
            min_confidence: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate<T> {
    pub frequency_hz: Option<T>,
    pub confidence: T,
}

impl<T: Sample> PitchEstimate<T> {
    fn absent(confidence: T) -> Self {
        Self {
            frequency_hz: None,
            confidence,
        }
    }
}

pub struct PitchDetector<T: Sample> {
    window: usize,
    sample_rate: u32,
    config: PitchConfig,
    min_lag: usize,
    max_lag: usize,
    integration: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    signal_spec: Vec<Complex<T>>,
    head_spec: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
    prefix_energy: Vec<T>,
    cmnd: Vec<T>,
}

impl<T: Sample> std::fmt::Debug for PitchDetector<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PitchDetector")
            .field("window", &self.window)
            .field("sample_rate", &self.sample_rate)
            .field("min_lag", &self.min_lag)
            .field("max_lag", &self.max_lag)
            .finish()
    }
}

impl<T: Sample> PitchDetector<T> {
    /// Builds a detector for frames of exactly `window` samples.
    ///
    /// The window has to hold two periods of the lowest detectable pitch.
    pub fn new(window: usize, sample_rate: u32, config: PitchConfig) -> Result<Self> {
        if sample_rate == 0 {
            return Err(AnalysisError::InvalidInput("sample rate must be positive".into()));
        }
        let range = config.range;
        if !(range.min_hz > 0.0 && range.max_hz > range.min_hz) {
            return Err(AnalysisError::InvalidInput(format!(
                "invalid pitch range {}..{} Hz",
                range.min_hz, range.max_hz
            )));
        }
        let sr = f64::from(sample_rate);
        let required = (2.0 * sr / range.min_hz).ceil() as usize;
        if window < required {
            return Err(AnalysisError::FrameTooShort {
                len: window,
                required,
            });
        }
        let max_lag = (sr / range.min_hz).ceil() as usize;
        let min_lag = ((sr / range.max_hz).floor() as usize).max(2);
        // one extra lag so the parabola around max_lag has a right neighbour
        let integration = window - max_lag - 1;

        let mut planner = FftPlanner::<T>::new();
        let forward = planner.plan_fft_forward(window);
        let inverse = planner.plan_fft_inverse(window);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            window,
            sample_rate,
            config,
            min_lag,
            max_lag,
            integration,
            forward,
            inverse,
            signal_spec: vec![Complex::default(); window],
            head_spec: vec![Complex::default(); window],
            scratch: vec![Complex::default(); scratch_len],
            prefix_energy: vec![T::zero(); window + 1],
            cmnd: vec![T::zero(); max_lag + 2],
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn config(&self) -> &PitchConfig {
        &self.config
    }

    pub fn detect(&mut self, frame: &[T]) -> Result<PitchEstimate<T>> {
        if frame.len() != self.window {
            return Err(AnalysisError::InvalidInput(format!(
                "frame has {} samples, detector expects {}",
                frame.len(),
                self.window
            )));
        }
        let w = self.integration;

        self.prefix_energy[0] = T::zero();
        for (i, &x) in frame.iter().enumerate() {
            self.prefix_energy[i + 1] = self.prefix_energy[i] + x * x;
        }
        let head_energy = self.prefix_energy[w];
        let total = self.prefix_energy[self.window];
        if total <= T::lit(1e-12) * T::from_usize_lossy(self.window) {
            return Ok(PitchEstimate::absent(T::zero()));
        }

        // r(lag) = sum_{j<w} x[j] x[j+lag], via X * conj(H)
        for (i, c) in self.signal_spec.iter_mut().enumerate() {
            *c = Complex::new(frame[i], T::zero());
        }
        for (i, c) in self.head_spec.iter_mut().enumerate() {
            *c = if i < w {
                Complex::new(frame[i], T::zero())
            } else {
                Complex::default()
            };
        }
        self.forward
            .process_with_scratch(&mut self.signal_spec, &mut self.scratch);
        self.forward
            .process_with_scratch(&mut self.head_spec, &mut self.scratch);
        for (s, h) in self.signal_spec.iter_mut().zip(self.head_spec.iter()) {
            *s = *s * h.conj();
        }
        self.inverse
            .process_with_scratch(&mut self.signal_spec, &mut self.scratch);
        let norm = T::one() / T::from_usize_lossy(self.window);

        // cumulative mean normalized difference
        self.cmnd[0] = T::one();
        let mut running = T::zero();
        for lag in 1..=self.max_lag + 1 {
            let corr = self.signal_spec[lag].re * norm;
            let lagged_energy = self.prefix_energy[lag + w] - self.prefix_energy[lag];
            let d = (head_energy + lagged_energy - T::lit(2.0) * corr).max(T::zero());
            running = running + d;
            self.cmnd[lag] = if running > T::zero() {
                d * T::from_usize_lossy(lag) / running
            } else {
                T::one()
            };
        }

        let threshold = T::lit(self.config.yin_threshold);
        let mut best = None;
        let mut lag = self.min_lag;
        while lag <= self.max_lag {
            if self.cmnd[lag] < threshold {
                while lag < self.max_lag && self.cmnd[lag + 1] < self.cmnd[lag] {
                    lag += 1;
                }
                best = Some(lag);
                break;
            }
            lag += 1;
        }
        let lag = match best {
            Some(l) => l,
            None => {
                let mut min_lag = self.min_lag;
                for l in self.min_lag..=self.max_lag {
                    if self.cmnd[l] < self.cmnd[min_lag] {
                        min_lag = l;
                    }
                }
                min_lag
            }
        };

        let confidence = (T::one() - self.cmnd[lag]).max(T::zero()).min(T::one());
        let refined = parabolic_vertex(
            self.cmnd[lag - 1],
            self.cmnd[lag],
            self.cmnd[lag + 1],
            T::from_usize_lossy(lag),
        );
        let freq = T::from_u32(self.sample_rate).unwrap() / refined;
        if confidence.as_f64() < self.config.min_confidence
            || !self.config.range.contains(freq.as_f64())
        {
            return Ok(PitchEstimate::absent(confidence));
        }
        Ok(PitchEstimate {
            frequency_hz: Some(freq),
            confidence,
        })
    }
}

fn parabolic_vertex<T: Sample>(left: T, centre: T, right: T, x: T) -> T {
    let denom = left - T::lit(2.0) * centre + right;
    if denom.abs() <= T::epsilon() {
        return x;
    }
    let shift = T::lit(0.5) * (left - right) / denom;
    if shift.abs() > T::one() {
        x
    } else {
        x + shift
    }
}

/// One-shot detection on a frame of any valid length.
///
/// Allocates a detector sized to the frame; streaming callers should keep a
/// [`PitchDetector`] instead.
pub fn detect_pitch<T: Sample>(
    frame: &[T],
    sample_rate: u32,
    config: PitchConfig,
) -> Result<PitchEstimate<T>> {
    PitchDetector::new(frame.len(), sample_rate, config)?.detect(frame)
}
