use std::path::{Path, PathBuf};

use ansambl_core::audio_io::write_wav_mono;
use ansambl_core::library::{Manifest, ManifestEntry};
use ansambl_core::sensors::{AudienceSimState, Avatar, AvatarKeyframe, AvatarScript};
use ansambl_core::synth::{fixture_samples, CorpusSpec, FixtureLibrarySpec, FixtureSong, SyntheticCorpus};
use serde_json::json;

use crate::{write_json, CliError, CliResult};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

const EXAMPLE_CONFIG: &str = r#"// Example engine configuration. Every field is optional.
{
  "schema_version": 1,
  "seed": 1,
  // calibrated with `ansambl calibrate --corpus corpus --out gate.json`
  "gate_profile": "gate.json",
  "library": { "manifest": "library/manifest.json" },
  "ensemble": {
    "mode": "live",
    "idle": { "mean_interval_s": 45.0, "group_probability": 0.3 }
  },
  "sensors": {
    "source": "simulated",
    "cycle_hz": 10
  },
  "loop": { "min_fraction": 0.25, "max_fraction": 1.0, "echo_delay_ms": 120, "echo_gain_decay": 0.8 },
  "render": { "master_gain": 1.0, "limiter_threshold_dbfs": -1.0 },
  "bridge": { "listen": "127.0.0.1:8765" }
}
"#;

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::runtime(format!("{}: {e}", path.display()))
}

fn mkdir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io(path, e))
}

/// An avatar walking in on singer 3 and stopping in front of it.
pub fn approach_script() -> AvatarScript {
    let sim = AudienceSimState::default();
    let (x, y) = sim.singer_position(3);
    let at = |mm: f64| {
        let k = 1.0 + mm / 1000.0 / sim.radius_m;
        vec![Avatar { id: 1, x_m: x * k, y_m: y * k }]
    };
    AvatarScript {
        keyframes: vec![
            AvatarKeyframe { t_s: 0.0, avatars: at(4500.0) },
            AvatarKeyframe { t_s: 8.0, avatars: at(4500.0) },
            AvatarKeyframe { t_s: 12.0, avatars: at(800.0) },
        ],
    }
}

pub fn run(args: Args) -> CliResult {
    let out = &args.out;
    mkdir(out)?;
    let song = FixtureSong::default();
    let song_path = out.join("song.wav");
    write_wav_mono(&song_path, &song.render::<f32>(), song.sample_rate).map_err(|e| io(&song_path, e))?;

    let corpus = SyntheticCorpus::generate(&CorpusSpec::hundred(), args.seed);
    for clip in &corpus.clips {
        let dir = out.join("corpus").join(clip.label.as_str());
        mkdir(&dir)?;
        let path = dir.join(format!("{}.wav", clip.name));
        let samples: Vec<f32> = clip.samples.iter().map(|&x| x as f32).collect();
        write_wav_mono(&path, &samples, corpus.sample_rate).map_err(|e| io(&path, e))?;
    }

    let spec = FixtureLibrarySpec::default();
    let lib_dir = out.join("library");
    mkdir(&lib_dir)?;
    let mut entries = Vec::new();
    for s in fixture_samples(&spec, args.seed) {
        let rel = format!("{}.wav", s.id);
        let path = lib_dir.join(&rel);
        write_wav_mono(&path, &s.audio, spec.sample_rate).map_err(|e| io(&path, e))?;
        entries.push(ManifestEntry {
            id: s.id,
            path: rel,
            technique: s.technique.map(|t| t.to_string()),
            voice_part: s.voice_part.map(|p| p.to_string()),
            category: s.category.map(|c| c.to_string()),
            fundamental_hz: None,
            duration_s: None,
            loudness_dbfs: None,
            unpitched: false,
        });
    }
    let manifest_path = lib_dir.join("manifest.json");
    Manifest::new(entries).save(&manifest_path).map_err(|e| io(&manifest_path, e))?;

    write_json(&out.join("avatars.json"), &approach_script())?;
    let controls = json!([
        { "t_s": 0.4, "command": { "type": "arm_loop" } },
        { "t_s": 3.0, "command": { "type": "disarm_loop" } }
    ]);
    write_json(&out.join("controls.json"), &controls)?;
    let config_path = out.join("config.json");
    std::fs::write(&config_path, EXAMPLE_CONFIG).map_err(|e| io(&config_path, e))?;

    Ok(json!({
        "out": out.display().to_string(),
        "song": song_path.display().to_string(),
        "corpus_clips": corpus.clips.len(),
        "library_manifest": manifest_path.display().to_string(),
        "config": config_path.display().to_string(),
    }))
}
