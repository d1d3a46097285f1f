use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::{power_to_db, Sample};

/// Hann-windowed power spectrum of one analysis window.
pub struct SpectrumAnalyzer<T: Sample> {
    size: usize,
    sample_rate: u32,
    fft: Arc<dyn Fft<T>>,
    taper: Vec<T>,
    taper_energy: T,
    buffer: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
    power: Vec<T>,
}

impl<T: Sample> SpectrumAnalyzer<T> {
    pub fn new(size: usize, sample_rate: u32) -> Self {
        let fft = FftPlanner::<T>::new().plan_fft_forward(size);
        let taper: Vec<T> = (0..size)
            .map(|i| {
                let phase = T::lit(2.0) * T::PI() * T::from_usize_lossy(i) / T::from_usize_lossy(size);
                T::lit(0.5) - T::lit(0.5) * phase.cos()
            })
            .collect();
        let taper_energy = taper.iter().map(|&w| w * w).sum();
        let scratch_len = fft.get_inplace_scratch_len();
        Self {
            size,
            sample_rate,
            fft,
            taper,
            taper_energy,
            buffer: vec![Complex::default(); size],
            scratch: vec![Complex::default(); scratch_len],
            power: vec![T::zero(); size / 2 + 1],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Computes the one-sided power spectrum of `frame` (length `size`).
    pub fn process(&mut self, frame: &[T]) {
        debug_assert_eq!(frame.len(), self.size);
        for ((c, &x), &w) in self.buffer.iter_mut().zip(frame).zip(&self.taper) {
            *c = Complex::new(x * w, T::zero());
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (p, c) in self.power.iter_mut().zip(&self.buffer) {
            *p = c.norm_sqr();
        }
    }

    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * f64::from(self.sample_rate) / self.size as f64
    }

    fn bin_range(&self, low_hz: f64, high_hz: f64) -> std::ops::Range<usize> {
        let per_bin = f64::from(self.sample_rate) / self.size as f64;
        let lo = ((low_hz / per_bin).ceil() as usize).max(1);
        let hi = ((high_hz / per_bin).ceil() as usize).min(self.power.len());
        lo..hi.max(lo)
    }

    /// Fraction of spectral power (excluding DC) falling between consecutive
    /// `edges`. Writes `edges.len() - 1` values; all zeros for a silent frame.
    pub fn band_fractions(&self, edges: &[f64], out: &mut [T]) {
        debug_assert_eq!(out.len() + 1, edges.len());
        let total: T = self.power[1..].iter().copied().sum();
        for (slot, pair) in out.iter_mut().zip(edges.windows(2)) {
            let band: T = self.power[self.bin_range(pair[0], pair[1])].iter().copied().sum();
            *slot = if total > T::zero() { band / total } else { T::zero() };
        }
    }

    /// Mean-square level of the band in dB, scaled so a full-scale sine in
    /// the band reads about -3 dB.
    pub fn band_level_db(&self, low_hz: f64, high_hz: f64, floor_db: T) -> T {
        let band: T = self.power[self.bin_range(low_hz, high_hz)].iter().copied().sum();
        let ms = T::lit(2.0) * band / (T::from_usize_lossy(self.size) * self.taper_energy);
        power_to_db(ms, floor_db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn sine_energy_lands_in_its_band() {
        let mut sa = SpectrumAnalyzer::<f64>::new(2048, 48_000);
        sa.process(&synth::sine(3000.0, 1.0, 48_000, 2048));
        let mut fr = [0.0; 3];
        sa.band_fractions(&[100.0, 1000.0, 2000.0, 6000.0], &mut fr);
        assert!(fr[2] > 0.99, "{fr:?}");
        let db = sa.band_level_db(2000.0, 6000.0, -120.0);
        assert!((db + 3.01).abs() < 0.2, "{db}");
    }

    #[test]
    fn silence_gives_zero_fractions() {
        let mut sa = SpectrumAnalyzer::<f32>::new(1024, 48_000);
        sa.process(&[0.0; 1024]);
        let mut fr = [1.0; 2];
        sa.band_fractions(&[100.0, 1000.0, 4000.0], &mut fr);
        assert_eq!(fr, [0.0, 0.0]);
        assert_eq!(sa.band_level_db(100.0, 1000.0, -120.0), -120.0);
    }
}
