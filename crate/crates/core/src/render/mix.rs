use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{stereo_fold, ChannelLayout, RenderError};
use crate::scalar::Sample;
use crate::sensors::SENSOR_COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub sample_rate_hz: u32,
    pub block_size: usize,
    pub master_gain: f64,
    pub limiter_threshold_dbfs: f64,
    /// Per-channel level trim, unity by default.
    pub trims: Vec<f64>,
    pub downmix_stereo: bool,
    /// Extra render time after the performer input ends.
    pub tail_s: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 48_000,
            block_size: 512,
            master_gain: 1.0,
            limiter_threshold_dbfs: -1.0,
            trims: vec![1.0; SENSOR_COUNT],
            downmix_stereo: false,
            tail_s: 4.0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |path: &str, m: &str| Err(RenderError::Config(format!("render.{path}: {m}")));
        if !self.block_size.is_power_of_two() || !(64..=4096).contains(&self.block_size) {
            return bad("block_size", "must be a power of two in 64..=4096");
        }
        if self.sample_rate_hz == 0 || self.sample_rate_hz % 100 != 0 {
            return bad("sample_rate_hz", "must be a positive multiple of 100");
        }
        if !(self.master_gain >= 0.0 && self.master_gain.is_finite()) {
            return bad("master_gain", "must be non-negative");
        }
        if !(self.limiter_threshold_dbfs <= 0.0 && self.limiter_threshold_dbfs.is_finite()) {
            return bad("limiter_threshold_dbfs", "must be at most 0");
        }
        if self.trims.len() != SENSOR_COUNT || self.trims.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("trims", "need 16 non-negative values");
        }
        if !(self.tail_s >= 0.0) {
            return bad("tail_s", "must be non-negative");
        }
        Ok(())
    }

    pub fn output_channels(&self) -> usize {
        if self.downmix_stereo { 2 } else { SENSOR_COUNT }
    }

    pub fn deadline_s(&self) -> f64 {
        self.block_size as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn limiter_amplitude(&self) -> f64 {
        10f64.powf(self.limiter_threshold_dbfs / 20.0)
    }
}

/// One sample being played on the ring.
#[derive(Debug, Clone)]
pub struct Voice {
    pub audio: Arc<[f32]>,
    pub pos: usize,
    pub gain: f64,
    pub pan: [f64; SENSOR_COUNT],
}

impl Voice {
    pub fn finished(&self) -> bool {
        self.pos >= self.audio.len()
    }
}

/// Adds `n` samples of each voice into planar `out`, advancing the voices.
pub fn mix_voices<T: Sample>(voices: &mut [Option<Voice>], n: usize, out: &mut [T], offset: usize, stride: usize) {
    for slot in voices.iter_mut() {
        let Some(v) = slot else { continue };
        let take = n.min(v.audio.len() - v.pos);
        for (c, &g) in v.pan.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let g = T::lit(g * v.gain);
            let dst = &mut out[c * stride + offset..c * stride + offset + take];
            for (y, &x) in dst.iter_mut().zip(&v.audio[v.pos..v.pos + take]) {
                *y = *y + T::lit(f64::from(x)) * g;
            }
        }
        v.pos += take;
        if v.finished() {
            *slot = None;
        }
    }
}

/// Master gain, trims and the hard limiter, then interleaving into `out`.
#[derive(Debug, Clone)]
pub struct OutputStage<T> {
    gains: [T; SENSOR_COUNT],
    limit: T,
    fold: Option<[(T, T); SENSOR_COUNT]>,
}

impl<T: Sample> OutputStage<T> {
    pub fn new(config: &RenderConfig, layout: &ChannelLayout) -> Self {
        Self {
            gains: std::array::from_fn(|c| T::lit(config.master_gain * config.trims[c])),
            limit: T::lit(config.limiter_amplitude()),
            fold: config
                .downmix_stereo
                .then(|| stereo_fold(layout).map(|(l, r)| (T::lit(l), T::lit(r)))),
        }
    }

    pub fn set_gains(&mut self, config: &RenderConfig) {
        self.gains = std::array::from_fn(|c| T::lit(config.master_gain * config.trims[c]));
    }

    pub fn channels(&self) -> usize {
        if self.fold.is_some() { 2 } else { SENSOR_COUNT }
    }

    /// `planar` holds 16 channels of `n` samples each.
    pub fn write(&self, planar: &[T], n: usize, out: &mut [T]) {
        let limit = self.limit;
        let clip = |x: T| x.max(-limit).min(limit);
        match &self.fold {
            None => {
                for c in 0..SENSOR_COUNT {
                    let g = self.gains[c];
                    for i in 0..n {
                        out[i * SENSOR_COUNT + c] = clip(planar[c * n + i] * g);
                    }
                }
            }
            Some(fold) => {
                for i in 0..n {
                    let (mut l, mut r) = (T::zero(), T::zero());
                    for c in 0..SENSOR_COUNT {
                        let x = planar[c * n + i] * self.gains[c];
                        l = l + x * fold[c].0;
                        r = r + x * fold[c].1;
                    }
                    out[2 * i] = clip(l);
                    out[2 * i + 1] = clip(r);
                }
            }
        }
    }
}
