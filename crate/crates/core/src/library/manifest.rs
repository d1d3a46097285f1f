use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LibraryError, Result, SampleId, Technique, VocabularyCategory, VocalSample, VoicePart};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// On-disk sample list. Labels stay strings here so typos can be reported
/// instead of failing the whole load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub samples: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative to the manifest's directory.
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technique: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voice_part: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fundamental_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loudness_dbfs: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unpitched: bool,
}

impl ManifestEntry {
    pub fn from_sample(sample: &VocalSample, rel_path: &str) -> Self {
        Self {
            id: sample.id.to_string(),
            path: rel_path.to_owned(),
            technique: sample.technique.map(|t| t.to_string()),
            voice_part: sample.voice_part.map(|t| t.to_string()),
            category: sample.category.map(|t| t.to_string()),
            fundamental_hz: sample.fundamental_hz,
            duration_s: Some(sample.duration_s),
            loudness_dbfs: Some(sample.loudness_dbfs),
            unpitched: sample.unpitched,
        }
    }

    pub fn technique(&self) -> std::result::Result<Option<Technique>, String> {
        self.technique.as_deref().map(str::parse).transpose()
    }

    pub fn voice_part(&self) -> std::result::Result<Option<VoicePart>, String> {
        self.voice_part.as_deref().map(str::parse).transpose()
    }

    pub fn category(&self) -> std::result::Result<Option<VocabularyCategory>, String> {
        self.category.as_deref().map(str::parse).transpose()
    }

    /// The typed sample, if the entry carries measured fields and valid labels.
    pub fn to_sample(&self, base_dir: &Path) -> Option<VocalSample> {
        Some(VocalSample {
            id: SampleId::new(self.id.as_str()),
            path: base_dir.join(&self.path),
            technique: self.technique().ok()?,
            voice_part: self.voice_part().ok()?,
            category: self.category().ok()?,
            fundamental_hz: self.fundamental_hz,
            duration_s: self.duration_s?,
            loudness_dbfs: self.loudness_dbfs?,
            unpitched: self.unpitched,
        })
    }
}

impl Manifest {
    pub fn new(samples: Vec<ManifestEntry>) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            samples,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| LibraryError::Manifest(format!("at `{}`: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LibraryError::Manifest(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    SchemaVersion,
    MissingFile,
    DuplicateId,
    UnknownTechnique,
    UnknownVoicePart,
    UnknownCategory,
    MissingLabels,
    VoicePartImbalance,
}

impl FindingKind {
    pub fn describe(self) -> &'static str {
        match self {
            FindingKind::SchemaVersion => "unsupported schema version",
            FindingKind::MissingFile => "missing file",
            FindingKind::DuplicateId => "duplicate id",
            FindingKind::UnknownTechnique => "unknown technique",
            FindingKind::UnknownVoicePart => "unknown voice part",
            FindingKind::UnknownCategory => "unknown category",
            FindingKind::MissingLabels => "missing labels",
            FindingKind::VoicePartImbalance => "voice-part imbalance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    /// JSON paths of the offending entries, e.g. `samples[3]`.
    pub locations: Vec<String>,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn count(&self, kind: FindingKind) -> usize {
        self.findings.iter().filter(|f| f.kind == kind).count()
    }
}

fn suggest(value: &str, options: &[&'static str]) -> Option<String> {
    options
        .iter()
        .map(|o| (strsim::normalized_damerau_levenshtein(&value.to_lowercase(), &o.to_lowercase()), o))
        .filter(|(score, _)| *score >= 0.5)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, o)| (*o).to_owned())
}

fn label_finding<T: Copy>(
    kind: FindingKind,
    loc: &str,
    raw: &Option<String>,
    all: &[T],
    name: fn(T) -> &'static str,
) -> Option<Finding> {
    let raw = raw.as_deref()?;
    let options: Vec<&'static str> = all.iter().map(|v| name(*v)).collect();
    if options.contains(&raw) {
        return None;
    }
    let suggestion = suggest(raw, &options);
    let hint = suggestion
        .as_deref()
        .map(|s| format!("; did you mean `{s}`?"))
        .unwrap_or_default();
    Some(Finding {
        kind,
        locations: vec![loc.to_owned()],
        message: format!("{} `{raw}`{hint}", kind.describe()),
        suggestion,
    })
}

/// Checks a manifest without decoding any audio.
///
/// `base_dir` resolves relative paths; pass `None` to skip file checks.
pub fn validate_manifest(manifest: &Manifest, base_dir: Option<&Path>) -> ValidationReport {
    let mut findings = Vec::new();
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        findings.push(Finding {
            kind: FindingKind::SchemaVersion,
            locations: vec!["schema_version".into()],
            message: format!(
                "schema version {} (supported: {MANIFEST_SCHEMA_VERSION})",
                manifest.schema_version
            ),
            suggestion: None,
        });
    }

    let mut by_id: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut part_counts = [0usize; 2];
    for (i, e) in manifest.samples.iter().enumerate() {
        let loc = format!("samples[{i}]");
        by_id.entry(e.id.as_str()).or_default().push(loc.clone());
        if let Some(dir) = base_dir {
            if !dir.join(&e.path).is_file() {
                findings.push(Finding {
                    kind: FindingKind::MissingFile,
                    locations: vec![loc.clone()],
                    message: format!("missing file `{}`", e.path),
                    suggestion: None,
                });
            }
        }
        findings.extend(label_finding(
            FindingKind::UnknownTechnique,
            &loc,
            &e.technique,
            Technique::ALL,
            Technique::as_str,
        ));
        findings.extend(label_finding(
            FindingKind::UnknownVoicePart,
            &loc,
            &e.voice_part,
            VoicePart::ALL,
            VoicePart::as_str,
        ));
        findings.extend(label_finding(
            FindingKind::UnknownCategory,
            &loc,
            &e.category,
            VocabularyCategory::ALL,
            VocabularyCategory::as_str,
        ));
        let is_perf = e.technique.is_some() || e.voice_part.is_some();
        if (is_perf && (e.technique.is_none() || e.voice_part.is_none()))
            || (!is_perf && e.category.is_none())
        {
            findings.push(Finding {
                kind: FindingKind::MissingLabels,
                locations: vec![loc.clone()],
                message: "performance samples need technique and voice_part; others need category"
                    .into(),
                suggestion: None,
            });
        }
        if let Ok(Some(part)) = e.voice_part() {
            part_counts[part as usize] += 1;
        }
    }
    for (id, locs) in by_id {
        if locs.len() > 1 {
            findings.push(Finding {
                kind: FindingKind::DuplicateId,
                message: format!("duplicate id `{id}` at {}", locs.join(", ")),
                locations: locs,
                suggestion: None,
            });
        }
    }
    if part_counts[0] != part_counts[1] {
        findings.push(Finding {
            kind: FindingKind::VoicePartImbalance,
            locations: vec!["samples".into()],
            message: format!(
                "voice-part imbalance: {} First vs {} Second",
                part_counts[0], part_counts[1]
            ),
            suggestion: None,
        });
    }
    ValidationReport { findings }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, t: Option<&str>, p: Option<&str>, c: Option<&str>) -> ManifestEntry {
        ManifestEntry {
            id: id.into(),
            path: format!("{id}.wav"),
            technique: t.map(Into::into),
            voice_part: p.map(Into::into),
            category: c.map(Into::into),
            fundamental_hz: None,
            duration_s: None,
            loudness_dbfs: None,
            unpitched: false,
        }
    }

    fn valid() -> Manifest {
        Manifest::new(vec![
            entry("a", Some("Belting"), Some("First"), None),
            entry("b", Some("Falsetto"), Some("Second"), None),
            entry("c", None, None, Some("Whisper")),
        ])
    }

    #[test]
    fn valid_manifest_is_clean() {
        assert!(validate_manifest(&valid(), None).is_clean());
    }

    #[test]
    fn duplicate_ids_report_both_locations() {
        let mut m = valid();
        m.samples[1].id = "a".into();
        let r = validate_manifest(&m, None);
        let f = r.findings.iter().find(|f| f.kind == FindingKind::DuplicateId).unwrap();
        assert_eq!(f.locations, vec!["samples[0]", "samples[1]"]);
        assert!(f.message.contains("duplicate id"));
    }

    #[test]
    fn typo_gets_suggestion() {
        let mut m = valid();
        m.samples[0].technique = Some("Beltng".into());
        let r = validate_manifest(&m, None);
        let f = &r.findings[0];
        assert_eq!(f.kind, FindingKind::UnknownTechnique);
        assert_eq!(f.suggestion.as_deref(), Some("Belting"));
        assert!(f.message.contains("unknown technique"));
    }

    #[test]
    fn imbalance_and_missing_files() {
        let mut m = valid();
        m.samples.push(entry("d", Some("Belting"), Some("First"), None));
        let dir = tempfile::tempdir().unwrap();
        let r = validate_manifest(&m, Some(dir.path()));
        assert_eq!(r.count(FindingKind::VoicePartImbalance), 1);
        assert_eq!(r.count(FindingKind::MissingFile), 4);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let mut m = valid();
        m.samples[0].fundamental_hz = Some(331.25);
        m.samples[0].duration_s = Some(2.0);
        m.save(&p).unwrap();
        let once = Manifest::load(&p).unwrap();
        once.save(&p).unwrap();
        assert_eq!(Manifest::load(&p).unwrap(), m);
    }

    #[test]
    fn malformed_reports_path() {
        let err = Manifest::from_json(r#"{"schema_version":1,"samples":[{"id":3}]}"#).unwrap_err();
        assert!(err.to_string().contains("samples[0].id"), "{err}");
    }
}
