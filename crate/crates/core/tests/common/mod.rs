#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use ansambl_core::analysis::{AttackClass, VocalFeatures};
use ansambl_core::ensemble::{Ensemble, EnsembleConfig, EnsembleContext};
use ansambl_core::led::LedConfig;
use ansambl_core::library::{
    assign_playlists, build_matrix, BucketConfig, GroupingConfig, SampleId, Technique,
    VocabularyCategory, VocalSample, VoicePart,
};

pub const SR: u32 = 48_000;
pub const HOP: usize = 512;

pub fn perf(id: &str, part: VoicePart, t: Technique, f0: f64, dur: f64) -> VocalSample {
    VocalSample {
        id: id.into(),
        path: PathBuf::from(format!("{id}.wav")),
        technique: Some(t),
        voice_part: Some(part),
        category: None,
        fundamental_hz: Some(f0),
        duration_s: dur,
        loudness_dbfs: -18.0,
        unpitched: false,
    }
}

/// Three pitch bands by two length bands per part. The 220-440 Hz band
/// holds only two short Falsetto samples.
pub fn corpus() -> Vec<VocalSample> {
    let mut v = Vec::new();
    for part in VoicePart::ALL {
        for (pi, f0) in [150.0, 600.0, 1000.0].into_iter().enumerate() {
            for (li, dur) in [0.5, 2.0].into_iter().enumerate() {
                v.push(perf(&format!("{part}-{pi}-{li}"), *part, Technique::Belting, f0, dur));
            }
        }
        v.push(perf(&format!("{part}-falsetto-a"), *part, Technique::Falsetto, 320.0, 0.7));
        v.push(perf(&format!("{part}-falsetto-b"), *part, Technique::Falsetto, 340.0, 0.6));
    }
    v
}

pub fn vocab_ids(c: VocabularyCategory) -> Vec<SampleId> {
    (0..3).map(|i| SampleId::new(&format!("{c}-{i}"))).collect()
}

pub fn context() -> EnsembleContext {
    let samples = corpus();
    let matrix = build_matrix(&samples, &BucketConfig::default()).unwrap();
    let vocabulary: BTreeMap<_, _> = VocabularyCategory::ALL
        .iter()
        .map(|&c| (c, vocab_ids(c)))
        .collect();
    let all_vocab: Vec<SampleId> = vocabulary.values().flatten().cloned().collect();
    let playlists = assign_playlists(&matrix, &GroupingConfig::default())
        .unwrap()
        .with_vocabulary(&all_vocab);
    let mut lengths: HashMap<SampleId, u64> = samples
        .iter()
        .map(|s| (s.id.clone(), (s.duration_s * f64::from(SR)) as u64))
        .collect();
    for id in &all_vocab {
        lengths.insert(id.clone(), u64::from(SR));
    }
    EnsembleContext {
        matrix: Arc::new(matrix),
        playlists: Arc::new(playlists),
        vocabulary,
        lengths,
    }
}

pub fn ensemble(config: EnsembleConfig, seed: u64) -> Ensemble {
    Ensemble::new(
        config,
        &GroupingConfig::default(),
        seed,
        context(),
        LedConfig::default(),
        SR,
        HOP,
    )
    .unwrap()
}

pub fn hop(ts: u64, pitch: Option<f64>) -> VocalFeatures {
    VocalFeatures {
        pitch_hz: pitch,
        pitch_confidence: if pitch.is_some() { 0.95 } else { 0.1 },
        volume_dbfs: if pitch.is_some() { -18.0 } else { -70.0 },
        attack: AttackClass::None,
        is_singing: pitch.is_some(),
        timestamp: ts,
    }
}

/// A sung phrase of `voiced` hops followed by enough silence to close it.
pub fn phrase_hops(start_hop: u64, pitch: f64, voiced: u64, trailing: u64) -> Vec<VocalFeatures> {
    (0..voiced + trailing)
        .map(|k| {
            let ts = (start_hop + k) * HOP as u64;
            hop(ts, (k < voiced).then_some(pitch))
        })
        .collect()
}

/// Voiced hops needed for a phrase of `length_s`.
pub fn hops_for(length_s: f64) -> u64 {
    (length_s * f64::from(SR) / HOP as f64).round() as u64
}

pub mod engine {
    use std::sync::{Arc, OnceLock};

    use ansambl_core::analysis::{build_voice_profile, AnalysisConfig, CalibrationConfig, GateProfile};
    use ansambl_core::ensemble::EnsembleConfig;
    use ansambl_core::led::LedConfig;
    use ansambl_core::library::{BucketConfig, GroupingConfig, SampleLibrary};
    use ansambl_core::looper::LoopConfig;
    use ansambl_core::render::{Engine, EngineParts, RenderConfig, SensorInput, SensorTiming};
    use ansambl_core::synth::{fixture_library, CorpusSpec, FixtureLibrarySpec, SyntheticCorpus};

    pub fn profile() -> GateProfile {
        static P: OnceLock<GateProfile> = OnceLock::new();
        P.get_or_init(|| {
            let corpus = SyntheticCorpus::generate(&CorpusSpec::hundred(), 3);
            build_voice_profile(&corpus.clips::<f32>(), &CalibrationConfig::default())
                .unwrap()
                .0
        })
        .clone()
    }

    pub fn library() -> Arc<SampleLibrary> {
        static L: OnceLock<Arc<SampleLibrary>> = OnceLock::new();
        L.get_or_init(|| Arc::new(fixture_library(&FixtureLibrarySpec::default(), 1).unwrap()))
            .clone()
    }

    pub fn parts(sensor_input: SensorInput) -> EngineParts {
        EngineParts {
            seed: 17,
            analysis: AnalysisConfig::default(),
            profile: profile(),
            library: library(),
            buckets: BucketConfig::default(),
            grouping: GroupingConfig::default(),
            ensemble: EnsembleConfig::default(),
            sensors: SensorTiming::default(),
            sensor_input,
            looper: LoopConfig::default(),
            render: RenderConfig::default(),
            led: LedConfig::default(),
        }
    }

    pub fn build(parts: EngineParts) -> Engine<f32> {
        Engine::new(parts).unwrap()
    }
}
