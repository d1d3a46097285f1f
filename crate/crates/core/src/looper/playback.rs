use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{choose_segments, ring_distance, LoopConfig, LoopLayer, LoopTopology, Result, SegmentChoice};
use crate::scalar::Sample;
use crate::sensors::SENSOR_COUNT;

/// Index into the layer that `choice` plays at engine tick `t`, or `None`
/// before playback (plus echo delay) has started.
pub fn segment_index(choice: &SegmentChoice, origin: u64, delay: u64, t: u64) -> Option<u64> {
    let begin = origin + delay;
    (t >= begin).then(|| choice.start + (t - begin) % choice.length)
}

/// Everything the loop bus needs. Layers are shared and immutable.
#[derive(Debug, Clone)]
pub struct LoopState {
    pub config: LoopConfig,
    pub sample_rate: u32,
    pub layers: Vec<Arc<LoopLayer>>,
    pub choices: Vec<[SegmentChoice; SENSOR_COUNT]>,
    pub topology: LoopTopology,
}

impl LoopState {
    pub fn new(config: LoopConfig, sample_rate: u32) -> Self {
        Self {
            topology: LoopTopology::independent(&config),
            config,
            sample_rate,
            layers: Vec::new(),
            choices: Vec::new(),
        }
    }

    pub fn add_layer(&mut self, layer: LoopLayer, singer_seeds: &[u64; SENSOR_COUNT]) -> Result<()> {
        let choices = choose_segments(&layer, singer_seeds, &self.config)?;
        self.layers.push(Arc::new(layer));
        self.choices.push(choices);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.layers.clear();
        self.choices.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

/// Adds the loop bus for `n` samples starting at `tick` into `out`, which
/// is planar: channel `c` occupies `out[c * n..(c + 1) * n]`.
///
/// With a chosen singer, the channel at ring distance `d` plays the chosen
/// singer's segment delayed by `d` echo steps and scaled by `decay^d`.
/// The result depends only on the arguments, never on earlier blocks.
pub fn loop_contribution<T: Sample>(state: &LoopState, tick: u64, n: usize, out: &mut [T]) {
    assert_eq!(out.len(), n * SENSOR_COUNT, "planar buffer size");
    let topo = &state.topology;
    for (layer, choices) in state.layers.iter().zip(&state.choices) {
        let audio = &layer.audio;
        for c in 0..SENSOR_COUNT {
            let (source, delay, gain) = match topo.chosen_singer {
                Some(k) => {
                    let d = ring_distance(c, usize::from(k));
                    (usize::from(k), topo.delay_samples(d, state.sample_rate), topo.gain(d))
                }
                None => (c, 0, 1.0),
            };
            let choice = &choices[source];
            let gain = T::lit(gain);
            let channel = &mut out[c * n..(c + 1) * n];
            for (i, y) in channel.iter_mut().enumerate() {
                if let Some(idx) = segment_index(choice, layer.commit_tick, delay, tick + i as u64) {
                    debug_assert!(idx >= choice.start && idx < choice.end());
                    *y = *y + T::lit(f64::from(audio[idx as usize])) * gain;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerInfo {
    pub layer_id: u32,
    pub record_start: u64,
    pub commit_tick: u64,
    pub duration_samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyChange {
    pub tick: u64,
    pub chosen_singer: Option<u8>,
}

/// JSON sidecar for a loop-bus export.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopSession {
    pub sample_rate: u32,
    pub layers: Vec<LayerInfo>,
    pub choices: Vec<SegmentChoice>,
    pub topology: Vec<TopologyChange>,
}

impl LoopSession {
    pub fn record_layer(&mut self, layer: &LoopLayer, choices: &[SegmentChoice]) {
        self.layers.push(LayerInfo {
            layer_id: layer.layer_id,
            record_start: layer.record_start,
            commit_tick: layer.commit_tick,
            duration_samples: layer.duration(),
        });
        self.choices.extend_from_slice(choices);
    }

    pub fn record_topology(&mut self, tick: u64, chosen: Option<u8>) {
        if self.topology.last().map(|t| t.chosen_singer) != Some(chosen) {
            self.topology.push(TopologyChange { tick, chosen_singer: chosen });
        }
    }
}
