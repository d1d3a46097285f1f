use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use ansambl_bridge::{bind, serve, BridgeOptions};
use ansambl_core::analysis::GateProfile;
use ansambl_core::config::{EngineConfigDocument, SensorSource};
use ansambl_core::control::{EngineHandle, EngineShared, StateSnapshot};
use ansambl_core::library::SampleLibrary;
use ansambl_core::render::{render_offline, run_realtime, ControlScript, Engine, RealtimeOptions, VirtualDevice};
use ansambl_core::sensors::AudienceSimState;
use ansambl_core::synth::FixtureSong;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

fn doc() -> EngineConfigDocument {
    let mut doc = EngineConfigDocument::default();
    doc.sensors.source = SensorSource::Simulated;
    doc
}

fn assets() -> (GateProfile, Arc<SampleLibrary>) {
    static A: OnceLock<(GateProfile, Arc<SampleLibrary>)> = OnceLock::new();
    A.get_or_init(|| {
        let d = doc();
        (d.load_profile().unwrap(), Arc::new(d.load_library().unwrap()))
    })
    .clone()
}

fn engine() -> Engine<f32> {
    let d = doc();
    let (profile, library) = assets();
    Engine::new(d.engine_parts(profile, library, d.offline_sensor_input(None))).unwrap()
}

struct Running {
    handle: EngineHandle,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Drop for Running {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            t.join().unwrap();
        }
    }
}

/// A real-time engine on a paced virtual device.
fn start_engine() -> Running {
    let handle = EngineShared::new(64);
    let stop = Arc::new(AtomicBool::new(false));
    let (h, s) = (handle.clone(), stop.clone());
    let thread = std::thread::spawn(move || {
        let mut e = engine();
        let mut dev = VirtualDevice::new(48_000, 16, vec![0.0f32; 512]).paced().repeat_input();
        let opts = RealtimeOptions { stop: s, ..Default::default() };
        run_realtime(&mut e, &mut dev, &h, &opts).unwrap();
    });
    let deadline = Instant::now() + Duration::from_secs(30);
    while handle.snapshots.latest().is_none() {
        assert!(Instant::now() < deadline, "engine never published");
        std::thread::sleep(Duration::from_millis(5));
    }
    Running { handle, stop, thread: Some(thread) }
}

async fn start_bridge(handle: EngineHandle) -> (String, tokio::sync::oneshot::Sender<()>) {
    let listener = bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    tokio::spawn(serve(listener, handle, BridgeOptions::default(), async {
        let _ = rx.await;
    }));
    (format!("ws://{addr}"), tx)
}

async fn next_snapshot(ws: &mut Ws) -> StateSnapshot {
    loop {
        match ws.next().await.unwrap().unwrap() {
            Message::Text(t) => return serde_json::from_str(t.as_str()).unwrap(),
            _ => continue,
        }
    }
}

async fn next_json(ws: &mut Ws) -> serde_json::Value {
    loop {
        if let Message::Text(t) = ws.next().await.unwrap().unwrap() {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn snapshot_arrives_quickly_and_ticks_increase() {
    let running = start_engine();
    let (url, _stop) = start_bridge(running.handle.clone()).await;
    let started = Instant::now();
    let (mut ws, _) = connect_async(format!("{url}/state")).await.unwrap();
    let first = next_snapshot(&mut ws).await;
    assert!(started.elapsed() < Duration::from_millis(100), "{:?}", started.elapsed());
    first.check().unwrap();
    assert_eq!(first.singers.len(), 16);

    let mut last = first.tick;
    let window = Instant::now();
    let mut count = 0;
    while window.elapsed() < Duration::from_secs(1) {
        let s = next_snapshot(&mut ws).await;
        assert!(s.tick > last, "{} after {last}", s.tick);
        last = s.tick;
        count += 1;
    }
    assert!((12..=24).contains(&count), "{count} snapshots in a second");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn placing_an_avatar_reaches_the_snapshot() {
    let running = start_engine();
    let (url, _stop) = start_bridge(running.handle.clone()).await;
    let (mut state, _) = connect_async(format!("{url}/state")).await.unwrap();
    let (mut control, _) = connect_async(format!("{url}/control")).await.unwrap();
    assert_eq!(next_snapshot(&mut state).await.singers[3].bucket, 10);

    let (x, y) = AudienceSimState::default().singer_position(3);
    let cmd = serde_json::json!({"type": "place_avatars", "avatars": [{"id": 1, "x_m": x, "y_m": y}]});
    control.send(Message::Text(cmd.to_string().into())).await.unwrap();
    let ack = next_json(&mut control).await;
    assert_eq!(ack["type"], "ack");
    assert_eq!(ack["command"], "place_avatars");

    let deadline = Instant::now() + Duration::from_secs(2);
    loop {
        let s = next_snapshot(&mut state).await;
        if s.singers[3].bucket == 1 {
            assert_eq!(s.avatars.len(), 1);
            break;
        }
        assert!(Instant::now() < deadline, "bucket stayed at {}", s.singers[3].bucket);
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_command_gets_error_and_connection_survives() {
    let running = start_engine();
    let (url, _stop) = start_bridge(running.handle.clone()).await;
    let (mut control, _) = connect_async(format!("{url}/control")).await.unwrap();
    for bad in [
        "{not json",
        r#"{"type":"launch_rockets"}"#,
        r#"{"type":"set_config_value","path":"render.block_size","value":256}"#,
    ] {
        control.send(Message::Text(bad.into())).await.unwrap();
        let reply = next_json(&mut control).await;
        assert_eq!(reply["type"], "error", "{bad}");
        assert!(!reply["reason"].as_str().unwrap().is_empty());
    }
    control
        .send(Message::Text(r#"{"type":"set_mode","mode":"installation"}"#.into()))
        .await
        .unwrap();
    assert_eq!(next_json(&mut control).await["type"], "ack");

    let deadline = Instant::now() + Duration::from_secs(2);
    while running.handle.snapshots.latest().unwrap().mode != ansambl_core::ensemble::Mode::Installation {
        assert!(Instant::now() < deadline);
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn many_clients_share_the_stream() {
    let running = start_engine();
    let (url, _stop) = start_bridge(running.handle.clone()).await;
    let mut clients = Vec::new();
    for _ in 0..4 {
        clients.push(connect_async(format!("{url}/state")).await.unwrap().0);
    }
    for ws in &mut clients {
        let a = next_snapshot(ws).await;
        let b = next_snapshot(ws).await;
        assert!(b.tick > a.tick);
    }
    // a departed client does not disturb the others
    drop(clients.pop());
    let a = next_snapshot(&mut clients[0]).await;
    let b = next_snapshot(&mut clients[0]).await;
    assert!(b.tick > a.tick);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn clients_do_not_change_engine_output() {
    let input = FixtureSong::default().render::<f32>();
    let reference = render_offline(&mut engine(), &input, &ControlScript::default());

    let handle = EngineShared::new(16);
    let (url, _stop) = start_bridge(handle.clone()).await;
    let (mut ws, _) = connect_async(format!("{url}/state")).await.unwrap();
    let reader = tokio::spawn(async move {
        let mut n = 0;
        while let Some(Ok(_)) = ws.next().await {
            n += 1;
            if n == 5 {
                // leave mid-performance
                break;
            }
        }
        n
    });
    let input2 = input.clone();
    let served = tokio::task::spawn_blocking(move || {
        let mut e = engine();
        e.attach(handle);
        render_offline(&mut e, &input2, &ControlScript::default())
    })
    .await
    .unwrap();
    reader.abort();
    assert_eq!(served.trace, reference.trace);
    assert!(served.audio.iter().zip(&reference.audio).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[tokio::test]
async fn info_lists_schema_versions() {
    let (url, _stop) = start_bridge(EngineShared::new(4)).await;
    let addr = url.trim_start_matches("ws://");
    let mut stream = TcpStream::connect(addr).await.unwrap();
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    stream
        .write_all(format!("GET / HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").as_bytes())
        .await
        .unwrap();
    let mut body = String::new();
    stream.read_to_string(&mut body).await.unwrap();
    assert!(body.starts_with("HTTP/1.1 200"));
    assert!(body.contains("\"snapshot_schema_version\":1"));
}

#[test]
fn bad_listen_address_is_refused() {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    assert!(rt.block_on(bind("not-an-address")).is_err());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn stalled_client_does_not_hold_back_others() {
    let running = start_engine();
    let (url, _stop) = start_bridge(running.handle.clone()).await;
    // connected but never reads
    let (_stalled, _) = connect_async(format!("{url}/state")).await.unwrap();
    let (mut live, _) = connect_async(format!("{url}/state")).await.unwrap();
    let missed_before = running.handle.metrics.missed_deadlines.load(Ordering::Relaxed);
    let window = Instant::now();
    let mut count = 0;
    let mut last = None;
    while window.elapsed() < Duration::from_secs(2) {
        let s = next_snapshot(&mut live).await;
        assert!(last.is_none_or(|t| s.tick > t));
        last = Some(s.tick);
        count += 1;
    }
    assert!(count >= 24, "{count} snapshots in two seconds");
    assert_eq!(running.handle.metrics.missed_deadlines.load(Ordering::Relaxed), missed_before);
}
