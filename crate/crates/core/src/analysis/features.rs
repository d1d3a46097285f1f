use crossbeam_queue::ArrayQueue;
use serde::{Deserialize, Serialize};

use super::AttackClass;

/// Per-hop description of the performer's voice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocalFeatures {
    pub pitch_hz: Option<f64>,
    pub pitch_confidence: f64,
    pub volume_dbfs: f64,
    pub attack: AttackClass,
    pub is_singing: bool,
    /// Sample index of the analysis window centre.
    pub timestamp: u64,
}

impl VocalFeatures {
    pub fn silent(timestamp: u64) -> Self {
        Self {
            pitch_hz: None,
            pitch_confidence: 0.0,
            volume_dbfs: super::SILENCE_FLOOR_DBFS,
            attack: AttackClass::None,
            is_singing: false,
            timestamp,
        }
    }
}

/// Bounded hand-off from the analysis path; when full the oldest record is
/// overwritten.
#[derive(Debug)]
pub struct FeatureQueue {
    inner: ArrayQueue<VocalFeatures>,
}

impl FeatureQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            inner: ArrayQueue::new(capacity.max(1)),
        }
    }

    /// Returns the record that was dropped to make room, if any.
    pub fn publish(&self, features: VocalFeatures) -> Option<VocalFeatures> {
        self.inner.force_push(features)
    }

    pub fn pop(&self) -> Option<VocalFeatures> {
        self.inner.pop()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_queue_drops_oldest() {
        let q = FeatureQueue::new(2);
        assert!(q.publish(VocalFeatures::silent(1)).is_none());
        assert!(q.publish(VocalFeatures::silent(2)).is_none());
        let dropped = q.publish(VocalFeatures::silent(3)).unwrap();
        assert_eq!(dropped.timestamp, 1);
        assert_eq!(q.pop().unwrap().timestamp, 2);
        assert_eq!(q.pop().unwrap().timestamp, 3);
        assert!(q.is_empty());
    }
}
