use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::manifest::ManifestEntry;
use super::{
    ingest_sample, validate_manifest, FindingKind, IngestConfig, LibraryError, Manifest, Result,
    SampleId, VocabularyCategory, VocalSample,
};
use crate::audio_io;

/// Samples with their decoded audio, shared read-only after loading.
#[derive(Debug, Clone, Default)]
pub struct SampleLibrary {
    sample_rate: u32,
    samples: BTreeMap<SampleId, VocalSample>,
    audio: BTreeMap<SampleId, Arc<[f32]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DatasetStats {
    pub total: usize,
    pub performance: usize,
    pub unpitched: usize,
    pub total_duration_s: f64,
    pub by_technique: BTreeMap<String, usize>,
    pub by_voice_part: BTreeMap<String, usize>,
    pub by_category: BTreeMap<String, usize>,
}

impl SampleLibrary {
    pub fn new(sample_rate: u32) -> Self {
        Self {
            sample_rate,
            ..Self::default()
        }
    }

    pub fn insert(&mut self, sample: VocalSample, audio: impl Into<Arc<[f32]>>) {
        self.audio.insert(sample.id.clone(), audio.into());
        self.samples.insert(sample.id.clone(), sample);
    }

    /// Loads a manifest whose measured fields are already filled in.
    ///
    /// Entries lacking measurements are ingested on the fly. Any finding
    /// other than a voice-part imbalance aborts the load.
    pub fn load(manifest_path: &Path, config: &IngestConfig) -> Result<Self> {
        let manifest = Manifest::load(manifest_path)?;
        let base = base_dir(manifest_path);
        let report = validate_manifest(&manifest, Some(&base));
        if let Some(f) = report
            .findings
            .iter()
            .find(|f| f.kind != FindingKind::VoicePartImbalance)
        {
            return Err(LibraryError::Manifest(format!(
                "{} ({})",
                f.message,
                f.locations.join(", ")
            )));
        }
        let mut lib = Self::new(config.sample_rate_hz);
        for entry in &manifest.samples {
            let path = base.join(&entry.path);
            match entry.to_sample(&base) {
                Some(sample) => {
                    let audio = audio_io::read_wav_mono(&path, config.sample_rate_hz).map_err(
                        |e| LibraryError::Undecodable {
                            path: path.display().to_string(),
                            reason: e.to_string(),
                        },
                    )?;
                    lib.insert(sample, audio);
                }
                None => {
                    let (sample, audio) = ingest_entry(entry, &base, config)?;
                    lib.insert(sample, audio);
                }
            }
        }
        Ok(lib)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, id: &SampleId) -> Option<&VocalSample> {
        self.samples.get(id)
    }

    pub fn audio(&self, id: &SampleId) -> Option<&Arc<[f32]>> {
        self.audio.get(id)
    }

    pub fn samples(&self) -> impl Iterator<Item = &VocalSample> {
        self.samples.values()
    }

    pub fn performance_samples(&self) -> Vec<VocalSample> {
        self.samples
            .values()
            .filter(|s| s.is_performance())
            .cloned()
            .collect()
    }

    /// Vocabulary sample ids of a category, in id order.
    pub fn vocabulary(&self, category: VocabularyCategory) -> Vec<SampleId> {
        self.samples
            .values()
            .filter(|s| s.category == Some(category))
            .map(|s| s.id.clone())
            .collect()
    }

    pub fn stats(&self) -> DatasetStats {
        let mut st = DatasetStats::default();
        for s in self.samples.values() {
            st.total += 1;
            st.total_duration_s += s.duration_s;
            if s.is_performance() {
                st.performance += 1;
            }
            if s.unpitched {
                st.unpitched += 1;
            }
            if let Some(t) = s.technique {
                *st.by_technique.entry(t.to_string()).or_default() += 1;
            }
            if let Some(p) = s.voice_part {
                *st.by_voice_part.entry(p.to_string()).or_default() += 1;
            }
            if let Some(c) = s.category {
                *st.by_category.entry(c.to_string()).or_default() += 1;
            }
        }
        st
    }
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

fn label_err(entry: &ManifestEntry, e: String) -> LibraryError {
    LibraryError::Manifest(format!("sample `{}`: {e}", entry.id))
}

fn ingest_entry(
    entry: &ManifestEntry,
    base: &Path,
    config: &IngestConfig,
) -> Result<(VocalSample, Vec<f32>)> {
    let (sample, audio) = ingest_sample(
        SampleId::new(entry.id.as_str()),
        &base.join(&entry.path),
        entry.technique().map_err(|e| label_err(entry, e))?,
        entry.voice_part().map_err(|e| label_err(entry, e))?,
        entry.category().map_err(|e| label_err(entry, e))?,
        config,
    )?;
    Ok((sample, audio))
}

/// Ingests every entry and writes the measured fields back into the manifest.
///
/// Entries that fail ingestion are left untouched and returned with their error.
pub fn build_manifest(
    manifest_path: &Path,
    config: &IngestConfig,
) -> Result<(Manifest, Vec<(String, LibraryError)>)> {
    let mut manifest = Manifest::load(manifest_path)?;
    let base = base_dir(manifest_path);
    let mut failures = Vec::new();
    for entry in manifest.samples.iter_mut() {
        match ingest_entry(entry, &base, config) {
            Ok((sample, _)) => *entry = ManifestEntry::from_sample(&sample, &entry.path),
            Err(e) => {
                if matches!(e, LibraryError::Unpitched(_)) {
                    entry.unpitched = true;
                }
                failures.push((entry.id.clone(), e));
            }
        }
    }
    manifest.save(manifest_path)?;
    Ok((manifest, failures))
}
