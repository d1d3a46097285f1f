use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use ansambl_bridge::{bind, serve, BridgeOptions};
use ansambl_core::audio_io::read_wav_mono;
use ansambl_core::config::{EngineConfigDocument, SensorSource};
use ansambl_core::control::{EngineHandle, EngineShared};
use ansambl_core::ensemble::Mode;
use ansambl_core::render::{run_realtime, Engine, RealtimeOptions, RunReport, SensorInput, VirtualDevice};
use ansambl_core::sensors::{spawn_tagged_reader, AvatarScript, LatestFrame};
use serde_json::{json, Value};

use crate::render::read_script;
use crate::{load_config, write_json, CliError, CliResult};

#[derive(clap::Args)]
pub struct LiveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bridge address, overriding the config.
    #[arg(long)]
    listen: Option<String>,
    #[arg(long)]
    no_bridge: bool,
    /// Performer audio looped into the virtual input; silence without it.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Stop after this many seconds instead of waiting for Ctrl-C.
    #[arg(long)]
    duration_s: Option<f64>,
    #[arg(long)]
    downmix_stereo: bool,
    /// Loop session export written at shutdown.
    #[arg(long)]
    session_out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Avatar keyframes; without them avatars come from the bridge.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Run as fast as possible instead of in real time.
    #[arg(long)]
    virtual_clock: bool,
    /// Required with the virtual clock.
    #[arg(long)]
    duration_s: Option<f64>,
    /// `live` or `installation` (default).
    #[arg(long, default_value = "installation", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long)]
    listen: Option<String>,
    #[arg(long)]
    no_bridge: bool,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    downmix_stereo: bool,
    #[arg(long)]
    session_out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    serde_json::from_value(Value::String(s.to_owned())).map_err(|_| format!("unknown mode `{s}`"))
}

struct Session {
    doc: EngineConfigDocument,
    engine: Engine<f32>,
    handle: EngineHandle,
    stop: Arc<AtomicBool>,
    input: Vec<f32>,
}

fn prepare(
    doc: EngineConfigDocument,
    sensor_input: impl FnOnce(&EngineConfigDocument, &EngineHandle, &Arc<AtomicBool>) -> Result<SensorInput, CliError>,
    input: Option<&PathBuf>,
) -> Result<Session, CliError> {
    let handle = EngineShared::new(256);
    let stop = Arc::new(AtomicBool::new(false));
    let sensors = sensor_input(&doc, &handle, &stop)?;
    let profile = doc.load_profile().map_err(|e| CliError::invalid(e.to_string()))?;
    let library = Arc::new(doc.load_library().map_err(|e| CliError::invalid(e.to_string()))?);
    let mut engine = Engine::<f32>::new(doc.engine_parts(profile, library, sensors))
        .map_err(|e| CliError::invalid(e.to_string()))?;
    if let Some(dev) = &doc.led_device {
        let f = std::fs::OpenOptions::new()
            .write(true)
            .create(true)
            .truncate(false)
            .open(dev)
            .map_err(|e| CliError::runtime(format!("{}: {e}", dev.display())))?;
        engine.set_led_sink(Box::new(BufWriter::new(f)));
    }
    let input = match input {
        Some(p) => read_wav_mono(p, doc.render.sample_rate_hz).map_err(|e| CliError::invalid(e.to_string()))?,
        None => Vec::new(),
    };
    Ok(Session { doc, engine, handle, stop, input })
}

fn configured_sensors(
    doc: &EngineConfigDocument,
    handle: &EngineHandle,
    stop: &Arc<AtomicBool>,
    script: Option<AvatarScript>,
) -> Result<SensorInput, CliError> {
    if doc.sensors.source != SensorSource::Serial {
        return Ok(doc.offline_sensor_input(script));
    }
    let path = doc.sensors.serial_path.as_ref().expect("validated");
    let port = File::open(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    let latest = Arc::new(LatestFrame::new());
    let metrics = handle.clone();
    spawn_tagged_reader(
        port,
        doc.sensors.quantize.clone(),
        Duration::from_secs_f64(1.0 / f64::from(doc.sensors.cycle_hz)),
        latest.clone(),
        move |n| {
            metrics.metrics.malformed_sensor_bytes.fetch_add(n, Ordering::Relaxed);
        },
        stop.clone(),
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(SensorInput::Shared(latest))
}

/// Bridge on its own runtime thread; Ctrl-C sets `stop`.
fn start_bridge(
    addr: &str,
    handle: EngineHandle,
    snapshot_hz: u32,
    stop: Arc<AtomicBool>,
    with_bridge: bool,
) -> Result<std::thread::JoinHandle<()>, CliError> {
    let (ready_tx, ready_rx) = std::sync::mpsc::channel::<Result<String, String>>();
    let addr = addr.to_owned();
    let thread = std::thread::Builder::new()
        .name("bridge".into())
        .spawn(move || {
            let rt = match tokio::runtime::Builder::new_multi_thread().worker_threads(1).enable_all().build() {
                Ok(rt) => rt,
                Err(e) => {
                    let _ = ready_tx.send(Err(e.to_string()));
                    return;
                }
            };
            rt.block_on(async move {
                let signal_stop = stop.clone();
                tokio::spawn(async move {
                    if tokio::signal::ctrl_c().await.is_ok() {
                        log::warn!("interrupted, shutting down");
                        signal_stop.store(true, Ordering::Relaxed);
                    }
                });
                let stopped = {
                    let stop = stop.clone();
                    async move {
                        while !stop.load(Ordering::Relaxed) {
                            tokio::time::sleep(Duration::from_millis(20)).await;
                        }
                    }
                };
                if !with_bridge {
                    let _ = ready_tx.send(Ok(String::new()));
                    stopped.await;
                    return;
                }
                let listener = match bind(&addr).await {
                    Ok(l) => l,
                    Err(e) => {
                        let _ = ready_tx.send(Err(format!("cannot listen on {addr}: {e}")));
                        return;
                    }
                };
                let local = listener.local_addr().map(|a| a.to_string()).unwrap_or(addr);
                let _ = ready_tx.send(Ok(local));
                if let Err(e) = serve(listener, handle, BridgeOptions { snapshot_hz }, stopped).await {
                    log::error!("bridge failed: {e}");
                }
            });
        })
        .map_err(|e| CliError::runtime(e.to_string()))?;
    match ready_rx.recv() {
        Ok(Ok(local)) => {
            if with_bridge {
                log::warn!("bridge listening on ws://{local}/state and ws://{local}/control");
            }
            Ok(thread)
        }
        Ok(Err(e)) => {
            let _ = thread.join();
            Err(CliError::runtime(e))
        }
        Err(_) => Err(CliError::runtime("bridge thread exited early")),
    }
}

/// Puts the calling thread under SCHED_FIFO. Threads spawned earlier keep
/// their normal priority, so only the audio loop is raised.
#[cfg(target_os = "linux")]
fn request_realtime_priority() {
    let param = libc::sched_param { sched_priority: 50 };
    // SAFETY: plain syscall on the current thread with a valid parameter.
    let rc = unsafe { libc::sched_setscheduler(0, libc::SCHED_FIFO, &param) };
    if rc != 0 {
        log::warn!("no real-time priority for audio: {}", std::io::Error::last_os_error());
    }
}

#[cfg(not(target_os = "linux"))]
fn request_realtime_priority() {}

fn report_json(report: &RunReport, session: &Session, wall: Duration) -> Value {
    let metrics = session.handle.metrics.snapshot(session.engine.ensemble().dropped_starts());
    json!({
        "blocks": report.blocks,
        "seconds": report.blocks as f64 * session.engine.block_size() as f64 / f64::from(session.engine.sample_rate()),
        "wall_s": wall.as_secs_f64(),
        "missed_deadlines": report.missed_deadlines,
        "mean_block_ms": report.mean_block_s * 1e3,
        "max_block_ms": report.max_block_s * 1e3,
        "deadline_ms": report.deadline_s * 1e3,
        "mean_block_fraction": if report.deadline_s > 0.0 { report.mean_block_s / report.deadline_s } else { 0.0 },
        "output_channels": session.engine.output_channels(),
        "metrics": metrics,
        "loop_layers": session.engine.loop_session().layers.len(),
    })
}

fn run_session(
    mut session: Session,
    paced: bool,
    duration_s: Option<f64>,
    listen: Option<String>,
    with_bridge: bool,
    session_out: Option<PathBuf>,
) -> Result<(Value, Session), CliError> {
    let listen = listen.unwrap_or_else(|| session.doc.bridge.listen.clone());
    let bridge = start_bridge(
        &listen,
        session.handle.clone(),
        session.doc.bridge.snapshot_hz,
        session.stop.clone(),
        with_bridge,
    )?;
    let sr = session.engine.sample_rate();
    let block = session.engine.block_size() as f64;
    let max_blocks = duration_s.map(|d| (d * f64::from(sr) / block).ceil() as u64);
    let mut device = VirtualDevice::new(sr, session.engine.output_channels(), std::mem::take(&mut session.input))
        .repeat_input();
    if paced {
        device = device.paced();
    }
    let options = RealtimeOptions {
        max_blocks,
        stop: session.stop.clone(),
        ..Default::default()
    };
    if paced {
        request_realtime_priority();
    }
    let started = Instant::now();
    // audio first, then control and network
    let report = run_realtime(&mut session.engine, &mut device, &session.handle, &options);
    session.stop.store(true, Ordering::Relaxed);
    let _ = bridge.join();
    let report = report.map_err(|e| CliError::runtime(e.to_string()))?;
    if let Some(p) = &session_out {
        write_json(p, session.engine.loop_session())?;
    }
    let value = report_json(&report, &session, started.elapsed());
    Ok((value, session))
}

pub fn live(args: LiveArgs) -> CliResult {
    let mut doc = load_config(args.config.as_deref(), args.seed)?;
    if args.downmix_stereo {
        doc.render.downmix_stereo = true;
    }
    log::warn!("no audio backend in this build; running on the paced virtual device");
    let script = doc.load_script().map_err(|e| CliError::invalid(e.to_string()))?;
    let session = prepare(doc, |d, h, s| configured_sensors(d, h, s, script), args.input.as_ref())?;
    let (value, _) = run_session(session, true, args.duration_s, args.listen, !args.no_bridge, args.session_out)?;
    Ok(value)
}

pub fn simulate(args: SimulateArgs) -> CliResult {
    let mut doc = load_config(args.config.as_deref(), args.seed)?;
    if args.downmix_stereo {
        doc.render.downmix_stereo = true;
    }
    doc.sensors.source = SensorSource::Simulated;
    doc.ensemble.mode = args.mode;
    if args.virtual_clock && args.duration_s.is_none() {
        return Err(CliError::invalid("--virtual-clock needs --duration-s"));
    }
    let script = match &args.script {
        Some(p) => Some(read_script(p)?),
        None => doc.load_script().map_err(|e| CliError::invalid(e.to_string()))?,
    };
    let session = prepare(doc, |d, _, _| Ok(d.offline_sensor_input(script)), args.input.as_ref())?;
    let (mut value, session) = run_session(
        session,
        !args.virtual_clock,
        args.duration_s,
        args.listen,
        !args.no_bridge,
        args.session_out,
    )?;
    let stats = session.engine.ensemble().stats();
    let seconds = value["seconds"].as_f64().unwrap_or(0.0);
    let mean = session.engine.ensemble().config().idle.mean_interval_s;
    value["mode"] = json!(args.mode);
    value["virtual_clock"] = json!(args.virtual_clock);
    value["installation"] = json!({
        "expected_opportunities_per_singer": seconds / mean,
        "opportunities": stats.opportunities,
        "idle_events": stats.idle_events,
        "provoked": stats.provoked,
        "responded": stats.responded,
        "group_events": stats.groups.len(),
        "groups": stats.groups,
    });
    Ok(value)
}
