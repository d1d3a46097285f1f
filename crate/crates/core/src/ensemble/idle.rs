use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::sensors::SENSOR_COUNT;

/// Poisson arrivals of idle opportunities for one singer.
#[derive(Debug, Clone)]
pub struct IdleSchedule {
    next: u64,
    mean_samples: f64,
    rng: ChaCha8Rng,
}

impl IdleSchedule {
    pub fn new(rng: ChaCha8Rng, mean_s: f64, sample_rate: u32, start: u64) -> Self {
        let mut s = Self {
            next: start,
            mean_samples: mean_s * f64::from(sample_rate),
            rng,
        };
        s.next = start + s.draw();
        s
    }

    fn draw(&mut self) -> u64 {
        let e: f64 = Exp1.sample(&mut self.rng);
        ((e * self.mean_samples).round() as u64).max(1)
    }

    pub fn next_at(&self) -> u64 {
        self.next
    }

    /// Number of arrivals at or before `now`, advancing past them.
    pub fn due(&mut self, now: u64) -> u32 {
        let mut n = 0;
        while self.next <= now {
            n += 1;
            self.next += self.draw();
        }
        n
    }

    pub fn set_mean(&mut self, mean_s: f64, sample_rate: u32) {
        self.mean_samples = mean_s * f64::from(sample_rate);
    }
}

/// Chooses a run of `size` ring-adjacent singers containing `initiator`.
///
/// Each candidate run is weighted by the initiator's relation bias towards
/// the other members. Members come back ordered by ring distance from the
/// initiator, initiator first.
pub fn pick_group(initiator: usize, size: usize, bias: &[f64], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = SENSOR_COUNT;
    let size = size.clamp(1, n);
    let runs: Vec<Vec<usize>> = (0..size)
        .map(|back| (0..size).map(|k| (initiator + n - back + k) % n).collect())
        .collect();
    let weights: Vec<f64> = runs
        .iter()
        .map(|run| {
            run.iter()
                .filter(|&&j| j != initiator)
                .map(|&j| bias.get(j).copied().unwrap_or(1.0))
                .sum::<f64>()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let chosen = if total > 0.0 {
        let mut x = rng.random::<f64>() * total;
        let mut idx = runs.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                idx = i;
                break;
            }
            x -= w;
        }
        idx
    } else {
        rng.random_range(0..runs.len())
    };
    let mut members = runs[chosen].clone();
    let ring_dist = |j: usize| {
        let d = j.abs_diff(initiator);
        d.min(n - d)
    };
    members.sort_by_key(|&j| (ring_dist(j), j));
    members.into_iter().map(|j| j as u8).collect()
}
