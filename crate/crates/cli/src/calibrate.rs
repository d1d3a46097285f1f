use std::path::PathBuf;

use ansambl_core::analysis::{build_voice_profile, AnalysisError, CalibrationClip, CalibrationConfig, ClipLabel};
use ansambl_core::audio_io::read_wav_mono;
use serde_json::json;

use crate::{CliError, CliResult, EXIT_CALIBRATION};

#[derive(clap::Args)]
pub struct Args {
    /// Directory with `singing/`, `speaking/` and `silence/` WAV folders.
    #[arg(long)]
    corpus: PathBuf,
    /// Where the gate profile JSON goes.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    required_separability: f64,
    #[arg(long, default_value_t = 48_000)]
    sample_rate: u32,
}

pub fn run(args: Args) -> CliResult {
    let mut clips = Vec::new();
    for label in ClipLabel::ALL {
        let dir = args.corpus.join(label.as_str());
        let entries = std::fs::read_dir(&dir).map_err(|e| {
            CliError::invalid(format!("missing `{label}` clips: {}: {e}", dir.display()))
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(CliError::invalid(format!("no `{label}` WAV files in {}", dir.display())));
        }
        for path in paths {
            let samples = read_wav_mono(&path, args.sample_rate)
                .map_err(|e| CliError::invalid(e.to_string()))?;
            clips.push(CalibrationClip {
                name: path.display().to_string(),
                label,
                samples,
                sample_rate_hz: args.sample_rate,
            });
        }
    }
    let config = CalibrationConfig {
        sample_rate_hz: args.sample_rate,
        required_separability: args.required_separability,
        ..CalibrationConfig::default()
    };
    match build_voice_profile(&clips, &config) {
        Ok((profile, report)) => {
            std::fs::write(&args.out, profile.to_json() + "\n")
                .map_err(|e| CliError::runtime(format!("{}: {e}", args.out.display())))?;
            Ok(json!({
                "profile": args.out.display().to_string(),
                "clips": clips.len(),
                "report": report,
            }))
        }
        Err(AnalysisError::CalibrationFailed { achieved, required, report }) => Err(CliError {
            code: EXIT_CALIBRATION,
            message: format!("separability {achieved:.3} is below the required {required:.2}"),
            details: Some(json!({ "achieved": achieved, "required": required, "report": report })),
        }),
        Err(e) => Err(CliError::invalid(e.to_string())),
    }
}
