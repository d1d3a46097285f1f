use super::{AnalysisError, Result};
use crate::scalar::{amplitude_to_db, Sample};

/// Floor applied to the level of digital silence.
pub const SILENCE_FLOOR_DBFS: f64 = -120.0;

/// RMS level of `samples` in dBFS, floored at [`SILENCE_FLOOR_DBFS`].
pub fn measure_volume<T: Sample>(samples: &[T]) -> Result<T> {
    if samples.is_empty() {
        return Err(AnalysisError::InvalidInput("empty frame".into()));
    }
    Ok(amplitude_to_db(rms(samples), T::lit(SILENCE_FLOOR_DBFS)))
}

pub(crate) fn rms<T: Sample>(samples: &[T]) -> T {
    if samples.is_empty() {
        return T::zero();
    }
    let sum: T = samples.iter().map(|&s| s * s).sum();
    (sum / T::from_usize_lossy(samples.len())).sqrt()
}
