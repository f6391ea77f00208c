//! The live channel: one WebSocket per player at `/live?token=..`.

use std::sync::Arc;

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::response::Response;
use durian_core::session::PlayerId;
use futures::stream::SplitSink;
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;

use super::protocol::*;
use super::{ApiError, AppState};

const POLICY_VIOLATION: u16 = 1008;

#[derive(Deserialize)]
pub(super) struct LiveQuery {
    token: String,
}

pub(super) async fn upgrade(
    State(state): State<Arc<AppState>>,
    Query(q): Query<LiveQuery>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let player = state.store().authenticate(&q.token)?;
    Ok(ws.on_upgrade(move |socket| run(socket, state, player)))
}

struct Outbox {
    sink: SplitSink<WebSocket, Message>,
    seq: u64,
}

impl Outbox {
    async fn send(&mut self, kind: MessageType, payload: impl Serialize) -> Result<(), axum::Error> {
        self.seq += 1;
        let msg = WireMessage::new(kind, self.seq, payload);
        let text = serde_json::to_string(&msg).expect("wire messages serialize");
        self.sink.send(Message::Text(text.into())).await
    }

    async fn error(&mut self, ref_seq: Option<u64>, e: &ApiError) -> Result<(), axum::Error> {
        let payload = ErrorPayload { ref_seq, code: e.code.to_owned(), message: e.message.clone() };
        self.send(MessageType::Error, payload).await
    }

    /// Reports a protocol violation and closes the connection.
    async fn violation(&mut self, ref_seq: Option<u64>, code: &'static str, message: String) {
        let payload = ErrorPayload { ref_seq, code: code.to_owned(), message: message.clone() };
        let _ = self.send(MessageType::Error, payload).await;
        let frame = CloseFrame { code: POLICY_VIOLATION, reason: code.into() };
        let _ = self.sink.send(Message::Close(Some(frame))).await;
    }
}

enum Step {
    Continue,
    Close,
}

async fn run(socket: WebSocket, state: Arc<AppState>, player: PlayerId) {
    let (sink, mut stream) = socket.split();
    let mut out = Outbox { sink, seq: 0 };
    let mut scores = state.subscribe_scores();
    let mut last_in: Option<u64> = None;
    loop {
        tokio::select! {
            incoming = stream.next() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Binary(_))) => {
                        out.violation(None, "BAD_FRAME", "frames must be JSON text".into()).await;
                        break;
                    }
                    Some(Ok(Message::Ping(_) | Message::Pong(_))) => continue,
                    Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                };
                match handle(&state, &player, &mut out, &mut last_in, text.as_str()).await {
                    Ok(Step::Continue) => {}
                    Ok(Step::Close) | Err(_) => break,
                }
            }
            update = scores.recv() => match update {
                Ok(u) => {
                    if out.send(MessageType::ScoreUpdate, u).await.is_err() {
                        break;
                    }
                }
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => break,
            }
        }
    }
}

async fn handle(
    state: &Arc<AppState>,
    player: &PlayerId,
    out: &mut Outbox,
    last_in: &mut Option<u64>,
    text: &str,
) -> Result<Step, axum::Error> {
    let msg: WireMessage = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => {
            out.violation(None, "MALFORMED", e.to_string()).await;
            return Ok(Step::Close);
        }
    };
    let seq = msg.seq;
    if let Some(last) = *last_in {
        if seq <= last {
            out.violation(Some(seq), "BAD_SEQ", format!("seq {seq} does not follow {last}")).await;
            return Ok(Step::Close);
        }
    }
    *last_in = Some(seq);
    let Some(kind) = MessageType::from_client(&msg.kind) else {
        out.violation(Some(seq), "UNKNOWN_TYPE", format!("unknown message type {:?}", msg.kind)).await;
        return Ok(Step::Close);
    };
    match kind {
        MessageType::Fix => {
            let fix: FixPayload = match msg.decode() {
                Ok(f) => f,
                Err(e) => {
                    out.violation(Some(seq), "MALFORMED", e.to_string()).await;
                    return Ok(Step::Close);
                }
            };
            match state.fix(player, fix, Some(seq)) {
                Ok(r) => {
                    for alert in r.alerts {
                        out.send(MessageType::Alert, AlertPayload { ref_seq: Some(seq), alert }).await?;
                    }
                    if let Some(q) = r.question {
                        out.send(MessageType::QuestionIssued, q).await?;
                    }
                }
                Err(e) => out.error(Some(seq), &e).await?,
            }
        }
        MessageType::CaptureAnswer => {
            let answer: AnswerPayload = match msg.decode() {
                Ok(a) => a,
                Err(e) => {
                    out.violation(Some(seq), "MALFORMED", e.to_string()).await;
                    return Ok(Step::Close);
                }
            };
            match state.answer(player, answer, Some(seq)) {
                Ok(r) => {
                    let captured = r.result.captured;
                    out.send(MessageType::CaptureResult, r.result).await?;
                    out.send(MessageType::DurianUpdate, r.durians).await?;
                    if captured {
                        let st = state.clone();
                        let p = player.clone();
                        let credited = tokio::task::spawn_blocking(move || st.credit_capture(&p))
                            .await
                            .map_err(ApiError::internal)
                            .and_then(|r| r);
                        if let Err(e) = credited {
                            out.error(Some(seq), &e).await?;
                        }
                    }
                    if let Some(q) = r.question {
                        out.send(MessageType::QuestionIssued, q).await?;
                    }
                }
                Err(e) => out.error(Some(seq), &e).await?,
            }
        }
        _ => unreachable!("from_client only yields client types"),
    }
    Ok(Step::Continue)
}
