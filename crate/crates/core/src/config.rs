//! The engine configuration document: JSON with `//` and `/* */` comments,
//! composed of every module's config plus file references.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{build_voice_profile, AnalysisConfig, CalibrationConfig, GateProfile};
use crate::ensemble::EnsembleConfig;
use crate::led::LedConfig;
use crate::library::{BucketConfig, GroupingConfig, IngestConfig, SampleLibrary};
use crate::looper::LoopConfig;
use crate::render::{EngineParts, RenderConfig, SensorInput, SensorTiming, CONTROL_RATE_HZ};
use crate::sensors::{AudienceSimState, AvatarScript, QuantizeConfig, SmoothingConfig};
use crate::synth::{fixture_library, CorpusSpec, FixtureLibrarySpec, SyntheticCorpus};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{}`: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("`{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("`{path}`: {reason}")]
    Invalid { path: String, reason: String },
}

impl ConfigError {
    fn at(path: impl Into<String>, reason: impl ToString) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    /// Dotted location of the problem inside the document.
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Read { .. } => None,
            ConfigError::Parse { path, .. } | ConfigError::Invalid { path, .. } => Some(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorSource {
    #[default]
    Silent,
    Simulated,
    /// Tagged frames from the aggregating microcontroller.
    Serial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorsSection {
    pub source: SensorSource,
    /// Device or file streaming tagged frames, for the serial source.
    pub serial_path: Option<PathBuf>,
    pub cycle_hz: u32,
    pub quantize: QuantizeConfig,
    pub smoothing: SmoothingConfig,
    pub simulation: AudienceSimState,
    /// Avatar keyframes for the simulated source.
    pub script: Option<PathBuf>,
}

impl Default for SensorsSection {
    fn default() -> Self {
        let timing = SensorTiming::default();
        Self {
            source: SensorSource::Silent,
            serial_path: None,
            cycle_hz: timing.cycle_hz,
            quantize: timing.quantize,
            smoothing: timing.smoothing,
            simulation: AudienceSimState::default(),
            script: None,
        }
    }
}

impl SensorsSection {
    pub fn timing(&self) -> SensorTiming {
        SensorTiming {
            cycle_hz: self.cycle_hz,
            quantize: self.quantize.clone(),
            smoothing: self.smoothing.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LibrarySection {
    /// Dataset manifest; without one the synthetic fixture library is used.
    pub manifest: Option<PathBuf>,
    pub ingest: IngestConfig,
}

impl Default for LibrarySection {
    fn default() -> Self {
        Self {
            manifest: None,
            ingest: IngestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeConfig {
    pub listen: String,
    pub snapshot_hz: u32,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8765".into(),
            snapshot_hz: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfigDocument {
    pub schema_version: u32,
    pub seed: u64,
    pub analysis: AnalysisConfig,
    /// Calibrated gate profile; without one the gate is calibrated on the
    /// synthetic corpus at startup.
    pub gate_profile: Option<PathBuf>,
    pub library: LibrarySection,
    pub buckets: BucketConfig,
    pub grouping: GroupingConfig,
    pub ensemble: EnsembleConfig,
    pub sensors: SensorsSection,
    #[serde(rename = "loop")]
    pub looper: LoopConfig,
    pub render: RenderConfig,
    pub led: LedConfig,
    /// Where LED frames are written.
    pub led_device: Option<PathBuf>,
    pub bridge: BridgeConfig,
}

impl Default for EngineConfigDocument {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 1,
            analysis: AnalysisConfig::default(),
            gate_profile: None,
            library: LibrarySection::default(),
            buckets: BucketConfig::default(),
            grouping: GroupingConfig::default(),
            ensemble: EnsembleConfig::default(),
            sensors: SensorsSection::default(),
            looper: LoopConfig::default(),
            render: RenderConfig::default(),
            led: LedConfig::default(),
            led_device: None,
            bridge: BridgeConfig::default(),
        }
    }
}

impl EngineConfigDocument {
    /// Parses and validates a document. Relative paths stay as written.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let clean = strip_comments(text);
        let mut de = serde_json::Deserializer::from_str(&clean);
        let doc: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse {
                path,
                line: inner.line(),
                column: inner.column(),
                message: with_suggestion(&inner.to_string()),
            }
        })?;
        de.end().map_err(|e| ConfigError::Parse {
            path: ".".into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        doc.validate()?;
        Ok(doc)
    }

    /// Loads a document and resolves its relative paths against the
    /// directory holding it.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let mut doc = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        doc.resolve_paths(base);
        Ok(doc)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.gate_profile);
        fix(&mut self.library.manifest);
        fix(&mut self.sensors.serial_path);
        fix(&mut self.sensors.script);
        fix(&mut self.led_device);
    }

    /// Field checks plus the constraints that span sections.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::at(
                "schema_version",
                format!("expected {CONFIG_SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        self.analysis.validate().map_err(|e| ConfigError::at("analysis", e))?;
        self.grouping.validate().map_err(|e| ConfigError::at("grouping", e))?;
        self.ensemble.validate().map_err(|e| match e {
            crate::ensemble::EnsembleError::InvalidConfig { path, reason } => {
                ConfigError::Invalid { path, reason }
            }
        })?;
        self.sensors.quantize.validate().map_err(|e| ConfigError::at("sensors.quantize", e))?;
        self.sensors
            .simulation
            .validate()
            .map_err(|e| ConfigError::at("sensors.simulation", e))?;
        self.looper.validate().map_err(|e| ConfigError::at("loop", e))?;
        self.render.validate().map_err(|e| ConfigError::at("render", e))?;
        self.led.validate().map_err(|e| ConfigError::at("led", e))?;

        let sr = self.render.sample_rate_hz;
        if self.analysis.sample_rate_hz != sr {
            return Err(ConfigError::at(
                "analysis.sample_rate_hz",
                format!("{} Hz differs from render.sample_rate_hz {sr} Hz", self.analysis.sample_rate_hz),
            ));
        }
        let cycle = self.sensors.cycle_hz;
        if cycle == 0 || CONTROL_RATE_HZ % cycle != 0 {
            return Err(ConfigError::at(
                "sensors.cycle_hz",
                format!("{cycle} Hz must divide the {CONTROL_RATE_HZ} Hz control rate"),
            ));
        }
        if self.sensors.source == SensorSource::Serial && self.sensors.serial_path.is_none() {
            return Err(ConfigError::at("sensors.serial_path", "required by the serial source"));
        }
        self.bridge
            .listen
            .parse::<SocketAddr>()
            .map_err(|e| ConfigError::at("bridge.listen", format!("`{}`: {e}", self.bridge.listen)))?;
        let hz = self.bridge.snapshot_hz;
        if hz == 0 || CONTROL_RATE_HZ % hz != 0 {
            return Err(ConfigError::at(
                "bridge.snapshot_hz",
                format!("{hz} Hz must divide the {CONTROL_RATE_HZ} Hz control rate"),
            ));
        }
        Ok(())
    }

    /// The configured gate profile, or one calibrated on the synthetic corpus.
    pub fn load_profile(&self) -> Result<GateProfile, ConfigError> {
        match &self.gate_profile {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                GateProfile::from_json(&text).map_err(|e| ConfigError::at("gate_profile", e))
            }
            None => {
                let corpus = SyntheticCorpus::generate(
                    &CorpusSpec {
                        sample_rate: self.analysis.sample_rate_hz,
                        ..CorpusSpec::hundred()
                    },
                    self.seed,
                );
                let config = CalibrationConfig {
                    sample_rate_hz: self.analysis.sample_rate_hz,
                    window: self.analysis.window,
                    hop: self.analysis.hop,
                    pitch: self.analysis.pitch,
                    attack: self.analysis.attack.clone(),
                    ..CalibrationConfig::default()
                };
                build_voice_profile(&corpus.clips::<f32>(), &config)
                    .map(|(p, _)| p)
                    .map_err(|e| ConfigError::at("gate_profile", e))
            }
        }
    }

    /// The dataset named by the manifest, or the synthetic fixture library.
    pub fn load_library(&self) -> Result<SampleLibrary, ConfigError> {
        let sr = self.render.sample_rate_hz;
        let library = match &self.library.manifest {
            Some(path) => SampleLibrary::load(path, &self.library.ingest),
            None => fixture_library(
                &FixtureLibrarySpec {
                    sample_rate: sr,
                    ..FixtureLibrarySpec::default()
                },
                self.seed,
            ),
        }
        .map_err(|e| ConfigError::at("library", e))?;
        if library.sample_rate() != sr {
            return Err(ConfigError::at(
                "library.ingest",
                format!("library is {} Hz, render runs at {sr} Hz", library.sample_rate()),
            ));
        }
        Ok(library)
    }

    /// Reads the configured avatar script, if any.
    pub fn load_script(&self) -> Result<Option<AvatarScript>, ConfigError> {
        let Some(path) = &self.sensors.script else { return Ok(None) };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.clone(),
            source,
        })?;
        let script: AvatarScript = serde_json::from_str(&strip_comments(&text))
            .map_err(|e| ConfigError::at("sensors.script", e))?;
        script.validate().map_err(|e| ConfigError::at("sensors.script", e))?;
        Ok(Some(script))
    }

    /// Sensor input for the silent and simulated sources; a script implies
    /// simulation. Serial input needs a reader thread and is wired by the
    /// caller.
    pub fn offline_sensor_input(&self, script: Option<AvatarScript>) -> SensorInput {
        if self.sensors.source == SensorSource::Simulated || script.is_some() {
            SensorInput::simulated(self.sensors.simulation.clone(), script, self.seed)
        } else {
            SensorInput::Silent
        }
    }

    pub fn engine_parts(
        &self,
        profile: GateProfile,
        library: Arc<SampleLibrary>,
        sensor_input: SensorInput,
    ) -> EngineParts {
        EngineParts {
            seed: self.seed,
            analysis: self.analysis.clone(),
            profile,
            library,
            buckets: self.buckets.clone(),
            grouping: self.grouping.clone(),
            ensemble: self.ensemble.clone(),
            sensors: self.sensors.timing(),
            sensor_input,
            looper: self.looper.clone(),
            render: self.render.clone(),
            led: self.led.clone(),
        }
    }
}

/// Blanks out `//` line comments and `/* */` block comments outside string
/// literals. Newlines are kept so positions still match the original text.
pub fn strip_comments(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    let mut in_string = false;
    while i < bytes.len() {
        let b = bytes[i];
        if in_string {
            out.push(b);
            if b == b'\\' && i + 1 < bytes.len() {
                out.push(bytes[i + 1]);
                i += 2;
                continue;
            }
            if b == b'"' {
                in_string = false;
            }
            i += 1;
            continue;
        }
        match (b, bytes.get(i + 1)) {
            (b'"', _) => {
                in_string = true;
                out.push(b);
                i += 1;
            }
            (b'/', Some(b'/')) => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    out.push(b' ');
                    i += 1;
                }
            }
            (b'/', Some(b'*')) => {
                out.extend([b' ', b' ']);
                i += 2;
                while i < bytes.len() && !(bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/')) {
                    out.push(if bytes[i] == b'\n' { b'\n' } else { b' ' });
                    i += 1;
                }
                if i < bytes.len() {
                    out.extend([b' ', b' ']);
                    i += 2;
                }
            }
            _ => {
                out.push(b);
                i += 1;
            }
        }
    }
    // only ASCII bytes were replaced, so multi-byte sequences are intact
    String::from_utf8(out).expect("comment stripping keeps UTF-8")
}

/// Adds the closest known field name to serde's unknown-field message.
fn with_suggestion(message: &str) -> String {
    let Some(rest) = message.strip_prefix("unknown field `") else {
        return message.to_string();
    };
    let Some(end) = rest.find('`') else {
        return message.to_string();
    };
    let unknown = &rest[..end];
    let expected: Vec<&str> = rest[end + 1..].split('`').skip(1).step_by(2).collect();
    let best = expected
        .iter()
        .map(|c| (strsim::jaro_winkler(unknown, c), *c))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    match best {
        Some((score, name)) if score >= 0.8 => format!("{message}; did you mean `{name}`?"),
        _ => message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(EngineConfigDocument::from_json("{}").unwrap(), EngineConfigDocument::default());
    }

    #[test]
    fn default_round_trips() {
        let doc = EngineConfigDocument::default();
        let text = serde_json::to_string_pretty(&doc).unwrap();
        assert_eq!(EngineConfigDocument::from_json(&text).unwrap(), doc);
    }

    #[test]
    fn comments_are_ignored() {
        let text = r#"{
            // master seed
            "seed": 9, /* inline */
            "bridge": { "listen": "0.0.0.0:9000" } // url-ish "//" inside strings stays
        }"#;
        let doc = EngineConfigDocument::from_json(text).unwrap();
        assert_eq!(doc.seed, 9);
        assert_eq!(doc.bridge.listen, "0.0.0.0:9000");
        assert_eq!(strip_comments(r#"{"a":"x//y"}"#), r#"{"a":"x//y"}"#);
    }

    #[test]
    fn unknown_field_names_path_and_suggestion() {
        let text = "{\n  \"render\": {\n    \"mastr_gain\": 0.5\n  }\n}";
        let err = EngineConfigDocument::from_json(text).unwrap_err();
        let ConfigError::Parse { path, line, message, .. } = &err else { panic!("{err}") };
        assert!(path.starts_with("render"), "{path}");
        assert_eq!(*line, 3);
        assert!(message.contains("did you mean `master_gain`"), "{message}");
    }

    #[test]
    fn wrong_type_names_path() {
        let text = r#"{"loop": {"echo_gain_decay": "loud"}}"#;
        let err = EngineConfigDocument::from_json(text).unwrap_err();
        assert_eq!(err.path(), Some("loop.echo_gain_decay"));
    }

    #[test]
    fn cross_field_checks() {
        let bad_rate = r#"{"analysis": {"sample_rate_hz": 44100}}"#;
        assert_eq!(
            EngineConfigDocument::from_json(bad_rate).unwrap_err().path(),
            Some("analysis.sample_rate_hz")
        );
        let serial = r#"{"sensors": {"source": "serial"}}"#;
        assert_eq!(
            EngineConfigDocument::from_json(serial).unwrap_err().path(),
            Some("sensors.serial_path")
        );
        let parts: Vec<&str> = (0..16).map(|i| if i < 9 { "First" } else { "Second" }).collect();
        let grouping = serde_json::json!({ "grouping": parts }).to_string();
        assert_eq!(EngineConfigDocument::from_json(&grouping).unwrap_err().path(), Some("grouping"));
        let cycle = r#"{"sensors": {"cycle_hz": 7}}"#;
        assert_eq!(EngineConfigDocument::from_json(cycle).unwrap_err().path(), Some("sensors.cycle_hz"));
        let version = r#"{"schema_version": 2}"#;
        assert_eq!(EngineConfigDocument::from_json(version).unwrap_err().path(), Some("schema_version"));
    }

    #[test]
    fn relative_paths_follow_the_document() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("engine.json");
        std::fs::write(&path, r#"{"gate_profile": "profiles/gate.json", "led_device": "/dev/null"}"#).unwrap();
        let doc = EngineConfigDocument::load(&path).unwrap();
        assert_eq!(doc.gate_profile.unwrap(), dir.path().join("profiles/gate.json"));
        assert_eq!(doc.led_device.unwrap(), PathBuf::from("/dev/null"));
    }
}
