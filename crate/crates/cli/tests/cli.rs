use std::path::Path;
use std::process::Command;

use ansambl_core::analysis::GateProfile;
use ansambl_core::audio_io::{read_wav, write_wav_mono};
use ansambl_core::synth::{sine, CorpusSpec, SyntheticCorpus};
use serde_json::{json, Value};
use tempfile::TempDir;

struct Run {
    code: i32,
    json: Value,
    stdout: String,
    stderr: String,
}

fn run(json_out: bool, args: &[&str]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ansambl"));
    if json_out {
        cmd.arg("--json");
    }
    let out = cmd.args(args).env("ANSAMBL_LOG", "error").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    Run {
        code: out.status.code().unwrap_or(-1),
        json: serde_json::from_str(&stdout).unwrap_or(Value::Null),
        stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn ansambl(args: &[&str]) -> Run {
    run(true, args)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_corpus(dir: &Path, copy_singing_as_speech: bool) {
    let corpus = SyntheticCorpus::generate(&CorpusSpec::small(), 4);
    for clip in &corpus.clips {
        let samples: Vec<f32> = clip.samples.iter().map(|&x| x as f32).collect();
        let mut labels = vec![clip.label.as_str()];
        if copy_singing_as_speech && clip.label.as_str() == "singing" {
            labels.push("speaking");
        }
        if copy_singing_as_speech && clip.label.as_str() == "speaking" {
            continue;
        }
        for label in labels {
            let d = dir.join(label);
            std::fs::create_dir_all(&d).unwrap();
            write_wav_mono(&d.join(format!("{}.wav", clip.name)), &samples, corpus.sample_rate).unwrap();
        }
    }
}

fn tone_file(dir: &Path, name: &str, f: f64, seconds: f64) -> std::path::PathBuf {
    let p = dir.join(name);
    write_wav_mono(&p, &sine::<f32>(f, 0.3, 48_000, (seconds * 48_000.0) as usize), 48_000).unwrap();
    p
}

#[test]
fn calibrate_writes_a_profile() {
    let dir = TempDir::new().unwrap();
    write_corpus(&dir.path().join("corpus"), false);
    let out = dir.path().join("gate.json");
    let r = ansambl(&["calibrate", "--corpus", s(&dir.path().join("corpus")), "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.json["report"]["separability"].as_f64().unwrap() >= 0.95);
    assert_eq!(r.json["clips"], 10);
    GateProfile::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
}

#[test]
fn calibrate_names_the_missing_label() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    write_corpus(&corpus, false);
    std::fs::remove_dir_all(corpus.join("silence")).unwrap();
    let r = ansambl(&["calibrate", "--corpus", s(&corpus), "--out", s(&dir.path().join("g.json"))]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("silence"), "{}", r.stderr);
    assert_eq!(r.json["exit_code"], 2);
}

#[test]
fn inseparable_corpus_exits_three() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    write_corpus(&corpus, true);
    let out = dir.path().join("g.json");
    let r = ansambl(&["calibrate", "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let achieved = r.json["details"]["achieved"].as_f64().unwrap();
    assert!(achieved < 0.95);
    assert!(r.stderr.contains("separability"));
    assert!(!out.exists());
}

#[test]
fn render_writes_sixteen_channels_and_a_trace() {
    let dir = TempDir::new().unwrap();
    let input = tone_file(dir.path(), "in.wav", 330.0, 2.0);
    let out = dir.path().join("out.wav");
    let r = ansambl(&["render", "--input", s(&input), "--out", s(&out), "--seed", "3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let audio = read_wav(&out).unwrap();
    assert_eq!(audio.channels, 16);
    assert_eq!(audio.sample_rate, 48_000);
    assert_eq!(r.json["frames"].as_u64().unwrap() as usize, audio.samples.len() / 16);
    assert!(audio.samples.len() / 16 >= 96_000);
    let trace = dir.path().join("out.trace.ndjson");
    assert_eq!(r.json["trace"], s(&trace));
    assert!(trace.exists());
    assert_eq!(r.json["seed"], 3);

    let stereo = dir.path().join("stereo.wav");
    let r = ansambl(&["render", "--input", s(&input), "--out", s(&stereo), "--downmix-stereo"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(read_wav(&stereo).unwrap().channels, 2);
}

#[test]
fn config_typo_is_reported_with_its_path() {
    let dir = TempDir::new().unwrap();
    let input = tone_file(dir.path(), "in.wav", 330.0, 0.5);
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, "// note\n{ \"render\": { \"master_gian\": 0.5 } }\n").unwrap();
    let r = ansambl(&["render", "--config", s(&cfg), "--input", s(&input), "--out", s(&dir.path().join("o.wav"))]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("render"), "{}", r.stderr);
    assert!(r.stderr.contains("master_gain"), "{}", r.stderr);
    assert!(!dir.path().join("o.wav").exists());
}

#[test]
fn out_of_range_config_value_is_invalid() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, json!({ "loop": { "echo_gain_decay": 1.5 } }).to_string()).unwrap();
    let r = ansambl(&["simulate", "--config", s(&cfg), "--virtual-clock", "--duration-s", "1", "--no-bridge"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r.stderr.contains("echo_gain_decay"), "{}", r.stderr);
}

#[test]
fn missing_input_is_a_json_error() {
    let dir = TempDir::new().unwrap();
    let r = ansambl(&["render", "--input", s(&dir.path().join("nope.wav")), "--out", s(&dir.path().join("o.wav"))]);
    assert_eq!(r.code, 2);
    assert_eq!(r.json["exit_code"], 2);
    assert!(r.json["error"].as_str().unwrap().contains("nope.wav"));
}

#[test]
fn human_output_is_key_value_lines() {
    let dir = TempDir::new().unwrap();
    let input = tone_file(dir.path(), "in.wav", 330.0, 0.5);
    let r = run(false, &["render", "--input", s(&input), "--out", s(&dir.path().join("o.wav"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.lines().any(|l| l == "channels: 16"), "{}", r.stdout);
}

fn manifest(dir: &Path, technique: &str) -> std::path::PathBuf {
    tone_file(dir, "a.wav", 220.0, 1.0);
    tone_file(dir, "b.wav", 330.0, 1.5);
    let p = dir.join("manifest.json");
    let m = json!({
        "schema_version": 1,
        "samples": [
            { "id": "a", "path": "a.wav", "technique": technique, "voice_part": "First" },
            { "id": "b", "path": "b.wav", "technique": "Falsetto", "voice_part": "Second" }
        ]
    });
    std::fs::write(&p, m.to_string()).unwrap();
    p
}

#[test]
fn dataset_commands() {
    let dir = TempDir::new().unwrap();
    let m = manifest(dir.path(), "Belting");
    let r = ansambl(&["dataset", "validate", "--manifest", s(&m)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["samples"], 2);

    let r = ansambl(&["dataset", "build", "--manifest", s(&m)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let built: Value = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
    let f0 = built["samples"][0]["fundamental_hz"].as_f64().unwrap();
    assert!((f0 - 220.0).abs() < 2.2, "{f0}");

    let r = ansambl(&["dataset", "stats", "--manifest", s(&m)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.json["stats"].is_object());
}

#[test]
fn dataset_rejects_unknown_labels() {
    let dir = TempDir::new().unwrap();
    let m = manifest(dir.path(), "Beltin");
    let r = ansambl(&["dataset", "validate", "--manifest", s(&m)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("Beltin"), "{}", r.stderr);
}

#[test]
fn simulate_on_a_virtual_clock() {
    let r = ansambl(&["simulate", "--virtual-clock", "--duration-s", "120", "--no-bridge", "--seed", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["mode"], "installation");
    assert_eq!(r.json["missed_deadlines"], 0);
    let inst = &r.json["installation"];
    assert_eq!(inst["opportunities"].as_array().unwrap().len(), 16);
    assert!((r.json["seconds"].as_f64().unwrap() - 120.0).abs() < 0.02);
    // far faster than real time
    assert!(r.json["wall_s"].as_f64().unwrap() < 60.0);
}

#[test]
fn virtual_clock_needs_a_duration() {
    let r = ansambl(&["simulate", "--virtual-clock", "--no-bridge"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--duration-s"));
}

#[test]
fn live_run_with_bridge_stops_after_its_duration() {
    let dir = TempDir::new().unwrap();
    let session = dir.path().join("session.json");
    let r = ansambl(&["live", "--duration-s", "1", "--listen", "127.0.0.1:0", "--session-out", s(&session)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["output_channels"], 16);
    assert!(r.json["blocks"].as_u64().unwrap() >= 93);
    assert!(session.exists());
}

#[test]
fn unusable_listen_address_is_a_runtime_error() {
    let r = ansambl(&["live", "--duration-s", "1", "--listen", "256.0.0.1:1"]);
    assert_ne!(r.code, 0);
    assert!(r.stderr.contains("256.0.0.1"), "{}", r.stderr);
}
