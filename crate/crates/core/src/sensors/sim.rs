use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{QuantizeConfig, Result, SensorError, SensorFrame, SensorReading, SENSOR_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Avatar {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
}

/// Singers on a circle around the origin plus the audience positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudienceSimState {
    pub radius_m: f64,
    /// Angle of each singer, radians counter-clockwise from +x.
    pub singer_angles_rad: Vec<f64>,
    pub avatars: Vec<Avatar>,
    /// Peak uniform jitter added to each range.
    pub noise_mm: f64,
}

impl Default for AudienceSimState {
    fn default() -> Self {
        Self {
            radius_m: 2.0,
            singer_angles_rad: (0..SENSOR_COUNT)
                .map(|i| i as f64 * TAU / SENSOR_COUNT as f64)
                .collect(),
            avatars: Vec::new(),
            noise_mm: 0.0,
        }
    }
}

impl AudienceSimState {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return Err(SensorError::InvalidInput("radius_m must be positive".into()));
        }
        if self.singer_angles_rad.len() != SENSOR_COUNT {
            return Err(SensorError::InvalidInput(format!(
                "need {SENSOR_COUNT} singer angles"
            )));
        }
        let mut a: Vec<f64> = self.singer_angles_rad.iter().map(|x| x.rem_euclid(TAU)).collect();
        a.sort_by(f64::total_cmp);
        if a.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-9) {
            return Err(SensorError::InvalidInput("singer angles must be distinct".into()));
        }
        if self.noise_mm < 0.0 {
            return Err(SensorError::InvalidInput("noise_mm must be non-negative".into()));
        }
        Ok(())
    }

    pub fn singer_position(&self, singer: usize) -> (f64, f64) {
        let a = self.singer_angles_rad[singer];
        (self.radius_m * a.cos(), self.radius_m * a.sin())
    }
}

/// Ranges from each singer to the nearest avatar; no avatars reads as far.
///
/// Jitter is drawn only when `noise_mm > 0`, so noiseless runs do not touch `rng`.
pub fn simulate_sensors(
    sim: &AudienceSimState,
    config: &QuantizeConfig,
    frame_seq: u64,
    timestamp: u64,
    rng: &mut ChaCha8Rng,
) -> SensorFrame {
    let readings = (0..SENSOR_COUNT)
        .map(|i| {
            let (sx, sy) = sim.singer_position(i);
            let nearest = sim
                .avatars
                .iter()
                .map(|a| (a.x_m - sx).hypot(a.y_m - sy))
                .min_by(f64::total_cmp);
            let mm = match nearest {
                None => f64::from(config.max_range_mm),
                Some(d) => {
                    let jitter = if sim.noise_mm > 0.0 {
                        rng.random_range(-sim.noise_mm..=sim.noise_mm)
                    } else {
                        0.0
                    };
                    d * 1000.0 + jitter
                }
            };
            let mm = mm.round().clamp(0.0, f64::from(u32::MAX)) as u32;
            SensorReading::new(i as u8, mm, timestamp, config)
        })
        .collect();
    SensorFrame::new(frame_seq, readings).expect("one reading per singer")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvatarKeyframe {
    pub t_s: f64,
    pub avatars: Vec<Avatar>,
}

/// Timed avatar positions, linearly interpolated between keyframes.
///
/// An avatar present in two consecutive keyframes moves between them; one
/// missing from the next keyframe leaves when that keyframe is reached.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvatarScript {
    pub keyframes: Vec<AvatarKeyframe>,
}

impl AvatarScript {
    pub fn validate(&self) -> Result<()> {
        if self
            .keyframes
            .windows(2)
            .any(|w| !(w[1].t_s > w[0].t_s))
        {
            return Err(SensorError::InvalidInput(
                "avatar keyframes must have increasing times".into(),
            ));
        }
        Ok(())
    }

    pub fn avatars_at(&self, t_s: f64) -> Vec<Avatar> {
        let idx = self.keyframes.partition_point(|k| k.t_s <= t_s);
        if idx == 0 {
            return Vec::new();
        }
        let cur = &self.keyframes[idx - 1];
        let Some(next) = self.keyframes.get(idx) else {
            return cur.avatars.clone();
        };
        let next_by_id: BTreeMap<u32, &Avatar> = next.avatars.iter().map(|a| (a.id, a)).collect();
        let f = (t_s - cur.t_s) / (next.t_s - cur.t_s);
        cur.avatars
            .iter()
            .map(|a| match next_by_id.get(&a.id) {
                Some(b) => Avatar {
                    id: a.id,
                    x_m: a.x_m + (b.x_m - a.x_m) * f,
                    y_m: a.y_m + (b.y_m - a.y_m) * f,
                },
                None => *a,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::sensors::quantize_mm_to_bucket;

    fn frame(sim: &AudienceSimState) -> SensorFrame {
        simulate_sensors(sim, &QuantizeConfig::default(), 0, 0, &mut rng_from_seed(1))
    }

    #[test]
    fn avatar_on_singer_three() {
        let mut sim = AudienceSimState::default();
        let (x, y) = sim.singer_position(3);
        sim.avatars.push(Avatar { id: 0, x_m: x, y_m: y });
        let f = frame(&sim);
        assert_eq!(f.reading(3).bucket(), 1);
        assert_eq!(f.reading(3).range_mm(), 300);
        // diametrically opposite: chord of length 2r
        let expect = (2.0 * sim.radius_m * 1000.0).round() as u32;
        assert_eq!(f.reading(11).range_mm(), expect);
        assert_eq!(
            f.reading(11).bucket(),
            quantize_mm_to_bucket(expect, &QuantizeConfig::default())
        );
        // every other singer: chord 2r sin(dθ/2)
        for i in 0..16 {
            let dtheta = (i as f64 - 3.0) * TAU / 16.0;
            let chord = 2.0 * sim.radius_m * (dtheta / 2.0).sin().abs() * 1000.0;
            let want = QuantizeConfig::default().clamp(chord.round() as u32);
            assert_eq!(f.reading(i).range_mm(), want, "singer {i}");
        }
    }

    #[test]
    fn no_avatars_is_far() {
        let f = frame(&AudienceSimState::default());
        assert!(f.readings().iter().all(|r| r.bucket() == 10 && r.range_mm() == 5000));
    }

    #[test]
    fn symmetric_avatars() {
        let mut sim = AudienceSimState::default();
        sim.avatars = vec![
            Avatar { id: 0, x_m: 1.3, y_m: 0.4 },
            Avatar { id: 1, x_m: -1.3, y_m: -0.4 },
        ];
        let f = frame(&sim);
        for i in 0..8 {
            assert_eq!(f.reading(i).range_mm(), f.reading(i + 8).range_mm());
        }
    }

    #[test]
    fn jitter_is_seeded() {
        let mut sim = AudienceSimState::default();
        sim.avatars.push(Avatar { id: 0, x_m: 0.0, y_m: 0.0 });
        sim.noise_mm = 50.0;
        let a = frame(&sim);
        assert_eq!(a, frame(&sim));
        assert!(a.readings().iter().all(|r| r.range_mm().abs_diff(2000) <= 50));
    }

    #[test]
    fn duplicate_angles_rejected() {
        let mut sim = AudienceSimState::default();
        sim.singer_angles_rad[1] = sim.singer_angles_rad[0] + TAU;
        assert!(sim.validate().is_err());
    }

    #[test]
    fn script_interpolates() {
        let s = AvatarScript {
            keyframes: vec![
                AvatarKeyframe { t_s: 0.0, avatars: vec![Avatar { id: 1, x_m: 0.0, y_m: 0.0 }] },
                AvatarKeyframe { t_s: 2.0, avatars: vec![Avatar { id: 1, x_m: 2.0, y_m: -4.0 }] },
                AvatarKeyframe { t_s: 3.0, avatars: vec![] },
            ],
        };
        s.validate().unwrap();
        assert_eq!(s.avatars_at(1.0), vec![Avatar { id: 1, x_m: 1.0, y_m: -2.0 }]);
        assert!(s.avatars_at(3.5).is_empty());
        assert!(s.avatars_at(-1.0).is_empty());
    }
}
