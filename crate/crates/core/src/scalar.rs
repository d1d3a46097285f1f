//! Scalar abstraction shared by the signal-processing code.
//!
//! Everything that touches audio samples or gain math is written against
//! [`Sample`], so the same analysis and mixing code runs in `f32` (the engine
//! default) or `f64` (handy for oracles and calibration).

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point sample type: `f32` or `f64`.
pub trait Sample:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default + Debug + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; every literal in the DSP code goes through here.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }
}

impl Sample for f32 {}
impl Sample for f64 {}

/// Convert a linear amplitude to decibels, flooring at `floor_db`.
pub fn amplitude_to_db<T: Sample>(amplitude: T, floor_db: T) -> T {
    if amplitude <= T::zero() {
        return floor_db;
    }
    let db = T::lit(20.0) * amplitude.log10();
    if db < floor_db {
        floor_db
    } else {
        db
    }
}

/// Convert a power ratio to decibels, flooring at `floor_db`.
pub fn power_to_db<T: Sample>(power: T, floor_db: T) -> T {
    if power <= T::zero() {
        return floor_db;
    }
    let db = T::lit(10.0) * power.log10();
    if db < floor_db {
        floor_db
    } else {
        db
    }
}

pub fn db_to_amplitude<T: Sample>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(20.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversions_round_trip() {
        for db in [-60.0f64, -12.0, -3.0, 0.0] {
            let a = db_to_amplitude(db);
            assert!((amplitude_to_db(a, -120.0) - db).abs() < 1e-9);
        }
        assert_eq!(amplitude_to_db(0.0f32, -120.0), -120.0);
        assert_eq!(power_to_db(1e-30f64, -120.0), -120.0);
    }
}
