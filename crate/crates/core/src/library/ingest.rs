use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LibraryError, Result, SampleId, Technique, VocabularyCategory, VocalSample, VoicePart};
use crate::analysis::{measure_volume, PitchConfig, PitchDetector};
use crate::audio_io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub sample_rate_hz: u32,
    pub window: usize,
    pub hop: usize,
    pub pitch: PitchConfig,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 48_000,
            window: 2048,
            hop: 512,
            pitch: PitchConfig::default(),
        }
    }
}


/// Measures already-decoded mono audio at the configured rate.
pub fn ingest_audio(
    id: SampleId,
    path: &Path,
    audio: &[f32],
    technique: Option<Technique>,
    voice_part: Option<VoicePart>,
    category: Option<VocabularyCategory>,
    config: &IngestConfig,
) -> Result<VocalSample> {
    if audio.is_empty() {
        return Err(LibraryError::Empty(id.to_string()));
    }
    let fundamental = median_pitch(audio, config)?;
    let loudness = measure_volume(audio)
        .map_err(|e| LibraryError::InvalidConfig(e.to_string()))?
        .min(0.0);
    let sample = VocalSample {
        id,
        path: path.to_path_buf(),
        technique,
        voice_part,
        category,
        fundamental_hz: fundamental,
        duration_s: audio.len() as f64 / f64::from(config.sample_rate_hz),
        loudness_dbfs: f64::from(loudness),
        unpitched: fundamental.is_none(),
    };
    if sample.unpitched && sample.is_performance() {
        return Err(LibraryError::Unpitched(sample.id.to_string()));
    }
    Ok(sample)
}

/// Decodes a WAV file (resampling if needed) and measures it.
///
/// Returns the sample together with its audio at the configured rate.
pub fn ingest_sample(
    id: SampleId,
    path: &Path,
    technique: Option<Technique>,
    voice_part: Option<VoicePart>,
    category: Option<VocabularyCategory>,
    config: &IngestConfig,
) -> Result<(VocalSample, Vec<f32>)> {
    let audio = audio_io::read_wav_mono(path, config.sample_rate_hz).map_err(|e| {
        LibraryError::Undecodable {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    })?;
    let sample = ingest_audio(id, path, &audio, technique, voice_part, category, config)?;
    Ok((sample, audio))
}

fn median_pitch(audio: &[f32], config: &IngestConfig) -> Result<Option<f64>> {
    let mut det = PitchDetector::<f32>::new(config.window, config.sample_rate_hz, config.pitch)
        .map_err(|e| LibraryError::InvalidConfig(e.to_string()))?;
    let padded;
    let audio = if audio.len() < config.window {
        padded = {
            let mut v = audio.to_vec();
            v.resize(config.window, 0.0);
            v
        };
        &padded[..]
    } else {
        audio
    };
    let mut pitches = Vec::new();
    let mut start = 0;
    while start + config.window <= audio.len() {
        let est = det
            .detect(&audio[start..start + config.window])
            .map_err(|e| LibraryError::InvalidConfig(e.to_string()))?;
        if let Some(f) = est.frequency_hz {
            pitches.push(f64::from(f));
        }
        start += config.hop;
    }
    if pitches.is_empty() {
        return Ok(None);
    }
    pitches.sort_by(f64::total_cmp);
    let n = pitches.len();
    Ok(Some(if n % 2 == 1 {
        pitches[n / 2]
    } else {
        0.5 * (pitches[n / 2 - 1] + pitches[n / 2])
    }))
}
