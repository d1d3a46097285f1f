//! `ansambl`: calibration, dataset tooling, offline rendering and the live
//! and simulated engine.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input or config,
//! 3 calibration below the required separability.

mod calibrate;
mod dataset;
mod fixtures;
mod render;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ansambl_core::config::EngineConfigDocument;
use clap::{Parser, Subcommand};
use serde_json::Value;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_CALIBRATION: u8 = 3;

#[derive(Parser)]
#[command(name = "ansambl", version, about = "Sixteen-singer interactive choir engine")]
struct Cli {
    /// Print a machine-readable JSON result on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a sing/speak gate profile from a labeled corpus.
    Calibrate(calibrate::Args),
    /// Render a performer recording to a 16-channel WAV and command trace.
    Render(render::Args),
    /// Run the engine in real time with the bridge.
    Live(run::LiveArgs),
    /// Run with simulated sensors, in real time or on a virtual clock.
    Simulate(run::SimulateArgs),
    /// Dataset manifest tools.
    Dataset {
        #[command(subcommand)]
        command: dataset::Command,
    },
    /// Write a synthetic song, corpus, library and example configs.
    Fixtures(fixtures::Args),
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
    pub details: Option<Value>,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into(), details: None }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: EXIT_RUNTIME, message: message.into(), details: None }
    }
}

pub type CliResult = Result<Value, CliError>;

/// Config from `--config`, or the defaults, with command-line overrides.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<EngineConfigDocument, CliError> {
    let mut doc = match path {
        Some(p) => EngineConfigDocument::load(p).map_err(|e| CliError {
            code: EXIT_INVALID,
            message: format!("config {}: {e}", p.display()),
            details: Some(serde_json::json!({ "path": e.path() })),
        })?,
        None => EngineConfigDocument::default(),
    };
    if let Some(s) = seed {
        doc.seed = s;
    }
    Ok(doc)
}

pub fn write_json(path: &PathBuf, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ANSAMBL_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Calibrate(a) => calibrate::run(a),
        Command::Render(a) => render::run(a),
        Command::Live(a) => run::live(a),
        Command::Simulate(a) => run::simulate(a),
        Command::Dataset { command } => dataset::run(command),
        Command::Fixtures(a) => fixtures::run(a),
    };
    match result {
        Ok(value) => {
            if cli.json {
                emit(&serde_json::to_string_pretty(&value).expect("serializable"));
            } else {
                print_human(&value);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            if cli.json {
                let mut out = serde_json::json!({ "error": e.message, "exit_code": e.code });
                if let Some(d) = e.details {
                    out["details"] = d;
                }
                emit(&serde_json::to_string_pretty(&out).expect("serializable"));
            }
            ExitCode::from(e.code)
        }
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_human(value: &Value) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::String(s) => emit(&format!("{k}: {s}")),
                    other => emit(&format!("{k}: {other}")),
                }
            }
        }
        other => emit(&other.to_string()),
    }
}
