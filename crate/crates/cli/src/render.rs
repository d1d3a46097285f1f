use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ansambl_core::audio_io::{read_wav_mono, write_wav_interleaved};
use ansambl_core::render::{render_offline, write_trace, ControlScript, Engine, TraceEvent};
use ansambl_core::sensors::AvatarScript;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::{load_config, write_json, CliError, CliResult};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mono performer recording; other rates are resampled.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Avatar keyframes driving simulated sensors.
    #[arg(long)]
    sensor_script: Option<PathBuf>,
    /// Timed operator commands.
    #[arg(long)]
    controls: Option<PathBuf>,
    /// Command trace; defaults to the WAV path with `.trace.ndjson`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Export of the recorded loop layers and topology changes.
    #[arg(long)]
    loop_session: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    downmix_stereo: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::invalid(format!("{what} {}: {e}", path.display())))?;
    let clean = ansambl_core::config::strip_comments(&text);
    let de = &mut serde_json::Deserializer::from_str(&clean);
    serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::invalid(format!("{what} {}: at `{}`: {}", path.display(), e.path(), e.inner()))
    })
}

pub fn read_script(path: &Path) -> Result<AvatarScript, CliError> {
    let script: AvatarScript = read_json(path, "sensor script")?;
    script
        .validate()
        .map_err(|e| CliError::invalid(format!("sensor script {}: {e}", path.display())))?;
    Ok(script)
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn run(args: Args) -> CliResult {
    let mut doc = load_config(args.config.as_deref(), args.seed)?;
    if args.downmix_stereo {
        doc.render.downmix_stereo = true;
    }
    let script = match &args.sensor_script {
        Some(p) => Some(read_script(p)?),
        None => doc.load_script().map_err(|e| CliError::invalid(e.to_string()))?,
    };
    let controls: ControlScript = match &args.controls {
        Some(p) => read_json(p, "control script")?,
        None => ControlScript::default(),
    };
    for (i, ev) in controls.events.iter().enumerate() {
        ev.command
            .validate()
            .map_err(|e| CliError::invalid(format!("control script event {i}: {e}")))?;
    }
    let sr = doc.render.sample_rate_hz;
    let input = read_wav_mono(&args.input, sr).map_err(|e| CliError::invalid(e.to_string()))?;

    let profile = doc.load_profile().map_err(|e| CliError::invalid(e.to_string()))?;
    let library = Arc::new(doc.load_library().map_err(|e| CliError::invalid(e.to_string()))?);
    let parts = doc.engine_parts(profile, library, doc.offline_sensor_input(script));
    let mut engine = Engine::<f32>::new(parts).map_err(|e| CliError::invalid(e.to_string()))?;
    if let Some(dev) = &doc.led_device {
        let f = File::create(dev).map_err(|e| CliError::runtime(format!("{}: {e}", dev.display())))?;
        engine.set_led_sink(Box::new(BufWriter::new(f)));
    }
    let out = render_offline(&mut engine, &input, &controls);

    write_wav_interleaved(&args.out, &out.audio, out.channels as u16, sr)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let trace_path = args.trace.clone().unwrap_or_else(|| args.out.with_extension("trace.ndjson"));
    let f = File::create(&trace_path).map_err(|e| CliError::runtime(format!("{}: {e}", trace_path.display())))?;
    write_trace(&out.trace, BufWriter::new(f)).map_err(|e| CliError::runtime(e.to_string()))?;
    if let Some(p) = &args.loop_session {
        write_json(p, &out.loop_session)?;
    }

    let phrases = out.trace.iter().filter(|r| matches!(r.event, TraceEvent::Phrase { .. })).count();
    let plays = out
        .trace
        .iter()
        .filter(|r| matches!(&r.event, TraceEvent::Command { command } if command.is_play()))
        .count();
    let control_errors: Vec<&str> = out
        .trace
        .iter()
        .filter_map(|r| match &r.event {
            TraceEvent::ControlError { message } => Some(message.as_str()),
            _ => None,
        })
        .collect();
    Ok(json!({
        "wav": args.out.display().to_string(),
        "trace": trace_path.display().to_string(),
        "channels": out.channels,
        "frames": out.frames(),
        "sample_rate": sr,
        "seed": doc.seed,
        "phrases": phrases,
        "plays": plays,
        "loop_layers": out.loop_session.layers.len(),
        "control_errors": control_errors,
        "wav_sha256": sha256_file(&args.out)?,
        "trace_sha256": sha256_file(&trace_path)?,
    }))
}
