use std::f64::consts::FRAC_PI_2;

use crate::sensors::SENSOR_COUNT;

/// Sixteen speakers on a ring, channel `i` at `360 * i / 16` degrees and
/// carrying singer `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelLayout {
    angles_deg: [f64; SENSOR_COUNT],
}

impl Default for ChannelLayout {
    fn default() -> Self {
        Self {
            angles_deg: std::array::from_fn(|i| 360.0 * i as f64 / SENSOR_COUNT as f64),
        }
    }
}

impl ChannelLayout {
    pub fn angle(&self, channel: usize) -> f64 {
        self.angles_deg[channel]
    }

    pub fn angles(&self) -> &[f64; SENSOR_COUNT] {
        &self.angles_deg
    }

    pub fn channel_of_singer(&self, singer: usize) -> usize {
        singer
    }

    /// Equal-power gains between the two channels bracketing `angle_deg`.
    pub fn pan(&self, angle_deg: f64) -> [f64; SENSOR_COUNT] {
        pan_between(angle_deg, self)
    }
}

pub fn pan_between(angle_deg: f64, layout: &ChannelLayout) -> [f64; SENSOR_COUNT] {
    let a = angle_deg.rem_euclid(360.0);
    let angles = layout.angles();
    // channel whose angle is the last one at or below `a`
    let lower = angles.partition_point(|&x| x <= a).saturating_sub(1);
    let upper = (lower + 1) % SENSOR_COUNT;
    let span = (angles[upper] - angles[lower]).rem_euclid(360.0);
    let theta = if span > 0.0 { ((a - angles[lower]).rem_euclid(360.0) / span).clamp(0.0, 1.0) } else { 0.0 };
    let mut gains = [0.0; SENSOR_COUNT];
    gains[lower] = (theta * FRAC_PI_2).cos();
    gains[upper] += (theta * FRAC_PI_2).sin();
    gains
}

/// Left/right gains that fold the ring onto a stereo pair by the sine of
/// each channel's angle; front and back land in the centre.
pub fn stereo_fold(layout: &ChannelLayout) -> [(f64, f64); SENSOR_COUNT] {
    std::array::from_fn(|c| {
        let p = 0.5 * (1.0 + layout.angle(c).to_radians().sin());
        ((p * FRAC_PI_2).cos(), (p * FRAC_PI_2).sin())
    })
}
