//! WebSocket surface of a running engine.
//!
//! `/state` streams [`StateSnapshot`] JSON to every client; `/control`
//! accepts [`ControlCommand`] JSON and answers each message with an ack or
//! an error. The engine never waits on the network: snapshots are polled
//! from its slot and commands go through its bounded queue.

use std::future::Future;
use std::net::SocketAddr;
use std::time::Duration;

use ansambl_core::control::{ControlCommand, EngineHandle, StateSnapshot, CONTROL_SCHEMA_VERSION};
use axum::extract::ws::{Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::broadcast;

/// Messages a client may fall behind before it is dropped.
const CLIENT_BACKLOG: usize = 16;

#[derive(Clone)]
struct AppState {
    engine: EngineHandle,
    snapshots: broadcast::Sender<Frame>,
}

#[derive(Clone)]
struct Frame {
    tick: u64,
    json: Utf8Bytes,
}

impl Frame {
    fn of(snapshot: &StateSnapshot) -> Self {
        Frame {
            tick: snapshot.tick,
            json: serde_json::to_string(snapshot)
                .expect("snapshots serialize")
                .into(),
        }
    }
}

pub struct BridgeOptions {
    pub snapshot_hz: u32,
}

impl Default for BridgeOptions {
    fn default() -> Self {
        Self { snapshot_hz: 20 }
    }
}

pub async fn bind(addr: &str) -> std::io::Result<TcpListener> {
    let addr: SocketAddr = addr
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("`{addr}`: {e}")))?;
    TcpListener::bind(addr).await
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    engine: EngineHandle,
    options: BridgeOptions,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let (tx, _) = broadcast::channel(CLIENT_BACKLOG);
    let poller = tokio::spawn(poll_snapshots(engine.clone(), tx.clone(), options.snapshot_hz));
    let app = router(AppState {
        engine,
        snapshots: tx,
    });
    let result = axum::serve(listener, app).with_graceful_shutdown(shutdown).await;
    poller.abort();
    result
}

fn router(state: AppState) -> Router {
    Router::new()
        .route("/", get(info))
        .route("/state", get(state_ws))
        .route("/control", get(control_ws))
        .with_state(state)
}

async fn info() -> impl IntoResponse {
    Json(json!({
        "snapshot_schema_version": ansambl_core::control::SNAPSHOT_SCHEMA_VERSION,
        "control_schema_version": CONTROL_SCHEMA_VERSION,
        "endpoints": ["/state", "/control"],
    }))
}

/// Forwards each new engine snapshot once, serialized a single time.
async fn poll_snapshots(engine: EngineHandle, tx: broadcast::Sender<Frame>, hz: u32) {
    let mut interval = tokio::time::interval(Duration::from_secs_f64(1.0 / f64::from(hz.max(1))));
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    let mut last = None;
    loop {
        interval.tick().await;
        let Some(snap) = engine.snapshots.latest() else { continue };
        if last.is_some_and(|t| snap.tick <= t) {
            continue;
        }
        last = Some(snap.tick);
        // no subscribers is fine
        let _ = tx.send(Frame::of(&snap));
    }
}

async fn state_ws(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| stream_state(socket, state))
}

async fn stream_state(mut socket: WebSocket, state: AppState) {
    let mut rx = state.snapshots.subscribe();
    let mut last = None;
    if let Some(snap) = state.engine.snapshots.latest() {
        let frame = Frame::of(&snap);
        last = Some(frame.tick);
        if socket.send(Message::Text(frame.json)).await.is_err() {
            return;
        }
    }
    loop {
        tokio::select! {
            msg = rx.recv() => match msg {
                Ok(frame) => {
                    if last.is_some_and(|t| frame.tick <= t) {
                        continue;
                    }
                    last = Some(frame.tick);
                    if socket.send(Message::Text(frame.json)).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    log::info!("dropping a /state client {n} snapshots behind");
                    let _ = socket.send(Message::Close(None)).await;
                    return;
                }
                Err(broadcast::error::RecvError::Closed) => return,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

async fn control_ws(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| handle_control(socket, state.engine))
}

async fn handle_control(mut socket: WebSocket, engine: EngineHandle) {
    while let Some(Ok(msg)) = socket.recv().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Binary(b) => match String::from_utf8(b.to_vec()) {
                Ok(s) => s.into(),
                Err(_) => {
                    if reply(&mut socket, error_reply("binary frames must be UTF-8 JSON")).await.is_err() {
                        return;
                    }
                    continue;
                }
            },
            Message::Close(_) => return,
            _ => continue,
        };
        let answer = match ControlCommand::from_json(text.as_str()) {
            Ok(cmd) => {
                let kind = command_type(&cmd);
                match engine.send(cmd) {
                    Ok(()) => json!({ "type": "ack", "command": kind }),
                    Err(_) => error_reply("engine command queue is full"),
                }
            }
            Err(reason) => error_reply(&reason),
        };
        if reply(&mut socket, answer).await.is_err() {
            return;
        }
    }
}

fn command_type(cmd: &ControlCommand) -> String {
    serde_json::to_value(cmd)
        .ok()
        .and_then(|v| v.get("type").and_then(|t| t.as_str().map(str::to_owned)))
        .unwrap_or_default()
}

fn error_reply(reason: &str) -> serde_json::Value {
    json!({ "type": "error", "reason": reason })
}

async fn reply(socket: &mut WebSocket, value: serde_json::Value) -> Result<(), axum::Error> {
    socket.send(Message::Text(value.to_string().into())).await
}
