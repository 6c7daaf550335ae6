//! Operator HTTP API.

use std::sync::Arc;

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;

use crate::hub::{Center, CommandError, CommandRequest, QueryError};

type Shared = State<Arc<Center>>;

pub fn router(center: Arc<Center>) -> Router {
    Router::new()
        .route("/api/status", get(status))
        .route("/api/health", get(health))
        .route("/api/sessions", get(sessions))
        .route("/api/sessions/{id}", get(session))
        .route("/api/sessions/{id}/telemetry", get(telemetry))
        .route("/api/events", get(events))
        .route("/api/commands", post(command))
        .route("/api/alarm/ack", post(ack))
        .route("/api/map", get(map))
        .route("/api/live", get(live))
        .with_state(center)
}

fn error(code: StatusCode, msg: impl Into<String>) -> Response {
    (code, Json(json!({ "error": msg.into() }))).into_response()
}

async fn status(State(c): Shared) -> Response {
    Json(c.status()).into_response()
}

async fn health(State(c): Shared) -> Response {
    let h = c.health();
    let code = if h.ok { StatusCode::OK } else { StatusCode::SERVICE_UNAVAILABLE };
    (code, Json(h)).into_response()
}

async fn sessions(State(c): Shared) -> Response {
    Json(c.sessions()).into_response()
}

async fn session(State(c): Shared, Path(id): Path<String>) -> Response {
    match c.session(&id) {
        Some(s) => Json(s).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no session `{id}`")),
    }
}

#[derive(Debug, Deserialize)]
struct Range {
    from: Option<f64>,
    to: Option<f64>,
}

async fn telemetry(State(c): Shared, Path(id): Path<String>, Query(r): Query<Range>) -> Response {
    let result = tokio::task::spawn_blocking(move || c.telemetry(&id, r.from, r.to)).await;
    match result {
        Ok(Ok(frames)) => Json(frames).into_response(),
        Ok(Err(e @ QueryError::NotFound(_))) => error(StatusCode::NOT_FOUND, e.to_string()),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[derive(Debug, Deserialize)]
struct EventFilter {
    session: Option<String>,
    event: Option<String>,
}

async fn events(State(c): Shared, Query(f): Query<EventFilter>) -> Response {
    match c.storage().read_events() {
        Ok(all) => {
            let keep: Vec<_> = all
                .into_iter()
                .filter(|e| f.session.as_ref().is_none_or(|s| e.get("session") == Some(s)))
                .filter(|e| f.event.as_ref().is_none_or(|k| e.get("event") == Some(k)))
                .collect();
            Json(keep).into_response()
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

fn submit(c: &Center, req: &CommandRequest) -> Response {
    match c.submit(req) {
        Ok(receipt) => Json(receipt).into_response(),
        Err(CommandError::Invalid(m)) => error(StatusCode::BAD_REQUEST, m),
        Err(CommandError::Rejected(m)) => error(StatusCode::CONFLICT, m),
    }
}

async fn command(State(c): Shared, Json(req): Json<CommandRequest>) -> Response {
    submit(&c, &req)
}

#[derive(Debug, Default, Deserialize)]
struct AckRequest {
    #[serde(default)]
    operator_id: String,
}

async fn ack(State(c): Shared, body: Option<Json<AckRequest>>) -> Response {
    let operator_id = body.map(|Json(b)| b.operator_id).unwrap_or_default();
    let req = CommandRequest {
        kind: "ACK_ALARM".into(),
        value: None,
        operator_id,
        session: None,
    };
    submit(&c, &req)
}

async fn map(State(c): Shared) -> Response {
    match c.map() {
        Some(m) => Json(m).into_response(),
        None => error(StatusCode::NOT_FOUND, "no map configured"),
    }
}

async fn live(State(c): Shared, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| live_session(c, socket))
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Reply<'a> {
    Status { status: &'a crate::hub::StatusView },
    CommandResult { ok: bool, #[serde(skip_serializing_if = "Option::is_none")] receipt: Option<crate::hub::CommandReceipt>, #[serde(skip_serializing_if = "Option::is_none")] error: Option<String> },
    Lagged { skipped: u64 },
}

fn text<T: Serialize>(v: &T) -> WsMessage {
    WsMessage::Text(serde_json::to_string(v).expect("serializable").into())
}

/// Pushes every live event as JSON and accepts command requests, answering
/// each with a `command_result`.
async fn live_session(c: Arc<Center>, socket: WebSocket) {
    let mut events = c.subscribe();
    let (mut tx, mut rx) = socket.split();
    let snapshot = c.status();
    if tx.send(text(&Reply::Status { status: &snapshot })).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            ev = events.recv() => {
                let msg = match ev {
                    Ok(ev) => text(&ev),
                    Err(RecvError::Lagged(n)) => text(&Reply::Lagged { skipped: n }),
                    Err(RecvError::Closed) => break,
                };
                if tx.send(msg).await.is_err() {
                    break;
                }
            }
            incoming = rx.next() => {
                let body = match incoming {
                    Some(Ok(WsMessage::Text(t))) => t,
                    Some(Ok(WsMessage::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let reply = match serde_json::from_str::<CommandRequest>(&body) {
                    Ok(req) => match c.submit(&req) {
                        Ok(r) => Reply::CommandResult { ok: true, receipt: Some(r), error: None },
                        Err(e) => Reply::CommandResult { ok: false, receipt: None, error: Some(e.to_string()) },
                    },
                    Err(e) => Reply::CommandResult { ok: false, receipt: None, error: Some(e.to_string()) },
                };
                if tx.send(text(&reply)).await.is_err() {
                    break;
                }
            }
        }
    }
}
