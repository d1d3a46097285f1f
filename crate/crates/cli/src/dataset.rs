use std::path::PathBuf;

use ansambl_core::library::{build_manifest, validate_manifest, FindingKind, IngestConfig, Manifest, SampleLibrary};
use clap::Subcommand;
use serde_json::json;

use crate::{CliError, CliResult};

#[derive(Subcommand)]
pub enum Command {
    /// Measure every entry and write the results back into the manifest.
    Build {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Check labels, ids and files without decoding audio.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Counts and durations per label.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
    },
}

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Build { manifest } => {
            let (m, failures) = build_manifest(&manifest, &IngestConfig::default())
                .map_err(|e| CliError::invalid(e.to_string()))?;
            let failed: Vec<_> = failures
                .iter()
                .map(|(id, e)| json!({ "id": id, "error": e.to_string() }))
                .collect();
            let value = json!({
                "manifest": manifest.display().to_string(),
                "samples": m.samples.len(),
                "failed": failed,
            });
            if failures.is_empty() {
                Ok(value)
            } else {
                Err(CliError {
                    code: crate::EXIT_INVALID,
                    message: format!("{} of {} samples failed to ingest", failures.len(), m.samples.len()),
                    details: Some(value),
                })
            }
        }
        Command::Validate { manifest } => {
            let m = Manifest::load(&manifest).map_err(|e| CliError::invalid(e.to_string()))?;
            let base = manifest.parent().map(PathBuf::from).unwrap_or_default();
            let report = validate_manifest(&m, Some(&base));
            let blocking = report
                .findings
                .iter()
                .filter(|f| f.kind != FindingKind::VoicePartImbalance)
                .count();
            let value = json!({
                "manifest": manifest.display().to_string(),
                "samples": m.samples.len(),
                "findings": report.findings,
            });
            if blocking == 0 {
                Ok(value)
            } else {
                let first = report
                    .findings
                    .iter()
                    .find(|f| f.kind != FindingKind::VoicePartImbalance)
                    .expect("counted");
                Err(CliError {
                    code: crate::EXIT_INVALID,
                    message: format!("{blocking} finding(s); first: {} at {}", first.message, first.locations.join(", ")),
                    details: Some(value),
                })
            }
        }
        Command::Stats { manifest } => {
            let lib = SampleLibrary::load(&manifest, &IngestConfig::default())
                .map_err(|e| CliError::invalid(e.to_string()))?;
            Ok(json!({ "manifest": manifest.display().to_string(), "stats": lib.stats() }))
        }
    }
}
