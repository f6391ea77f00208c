//! Trace replay against a running server over REST and the live channel.
//!
//! After each frame the client sends a WebSocket ping and reads until the
//! matching pong. The server answers pings only after it has finished
//! handling earlier frames, so everything the frame caused has arrived.

use std::collections::HashMap;

use durian_core::session::Phase;
use durian_core::{DurianState, Question, QuestionId};
use futures::{SinkExt, StreamExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use tokio_tungstenite::tungstenite::Message;

use super::{Event, FinalState, Policy, Transcript};
use crate::formats::landmarks::{masked_fixture, to_doc};
use crate::formats::trace::TracePoint;
use crate::service::protocol::*;
use crate::store::AccountView;

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("http: {0}")]
    Http(#[from] reqwest::Error),
    #[error("{status} {code}: {message}")]
    Api { status: u16, code: String, message: String },
    #[error("live channel: {0}")]
    Ws(#[from] tokio_tungstenite::tungstenite::Error),
    #[error("live channel: {0}")]
    Protocol(String),
    #[error("question {0} is not in the local bank")]
    UnknownQuestion(QuestionId),
}

pub struct Client {
    http: reqwest::Client,
    base: String,
    token: Option<String>,
}

impl Client {
    /// `base` is `http://host:port`; `ws://host:port` is accepted too.
    pub fn new(base: &str) -> Client {
        let base = base.trim_end_matches('/');
        let base = if let Some(rest) = base.strip_prefix("ws://") {
            format!("http://{rest}")
        } else {
            base.to_owned()
        };
        Client { http: reqwest::Client::new(), base, token: None }
    }

    pub fn token(&self) -> Option<&str> {
        self.token.as_deref()
    }

    pub fn live_url(&self) -> String {
        let host = self.base.strip_prefix("http://").unwrap_or(&self.base);
        format!("ws://{host}/live?token={}", self.token.as_deref().unwrap_or(""))
    }

    async fn send<T: for<'de> serde::Deserialize<'de>>(
        &self,
        req: reqwest::RequestBuilder,
    ) -> Result<T, RemoteError> {
        let req = match &self.token {
            Some(t) => req.bearer_auth(t),
            None => req,
        };
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let body: ErrorBody = resp.json().await.unwrap_or(ErrorBody {
            code: "UNKNOWN".into(),
            message: String::new(),
        });
        Err(RemoteError::Api { status: status.as_u16(), code: body.code, message: body.message })
    }

    pub async fn post<B: serde::Serialize, T: for<'de> serde::Deserialize<'de>>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, RemoteError> {
        self.send(self.http.post(format!("{}{path}", self.base)).json(body)).await
    }

    pub async fn get<T: for<'de> serde::Deserialize<'de>>(&self, path: &str) -> Result<T, RemoteError> {
        self.send(self.http.get(format!("{}{path}", self.base))).await
    }

    pub async fn register_and_login(&mut self, email: &str, password: &str) -> Result<LoginResponse, RemoteError> {
        let _: AccountView = self
            .post("/auth/register", &RegisterRequest {
                email: email.into(),
                password: password.into(),
                locale: "en".into(),
            })
            .await?;
        let login: LoginResponse = self
            .post("/auth/login", &LoginRequest { email: email.into(), password: password.into() })
            .await?;
        self.token = Some(login.token.clone());
        Ok(login)
    }
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

/// A live connection that tracks its outgoing sequence number.
pub struct Live {
    ws: Ws,
    seq: u64,
    pings: u64,
}

impl Live {
    pub async fn connect(url: &str) -> Result<Live, RemoteError> {
        let (ws, _) = tokio_tungstenite::connect_async_with_config(url, None, true).await?;
        Ok(Live { ws, seq: 0, pings: 0 })
    }

    pub async fn send(&mut self, kind: MessageType, payload: impl serde::Serialize) -> Result<u64, RemoteError> {
        self.seq += 1;
        let msg = WireMessage::new(kind, self.seq, payload);
        self.ws.send(Message::text(serde_json::to_string(&msg).unwrap())).await?;
        Ok(self.seq)
    }

    pub async fn recv(&mut self) -> Result<Option<WireMessage>, RemoteError> {
        while let Some(frame) = self.ws.next().await {
            match frame? {
                Message::Text(t) => {
                    return serde_json::from_str(t.as_str())
                        .map(Some)
                        .map_err(|e| RemoteError::Protocol(e.to_string()))
                }
                Message::Close(_) => return Ok(None),
                _ => continue,
            }
        }
        Ok(None)
    }

    /// Sends a frame and collects every message received until the server
    /// has handled it.
    pub async fn exchange(
        &mut self,
        kind: MessageType,
        payload: impl serde::Serialize,
    ) -> Result<Vec<WireMessage>, RemoteError> {
        self.send(kind, payload).await?;
        self.barrier().await
    }

    /// Pings the server and collects every message received before the pong.
    pub async fn barrier(&mut self) -> Result<Vec<WireMessage>, RemoteError> {
        self.pings += 1;
        let marker = self.pings.to_be_bytes().to_vec();
        self.ws.send(Message::Ping(marker.clone().into())).await?;
        let mut got = Vec::new();
        while let Some(frame) = self.ws.next().await {
            match frame? {
                Message::Text(t) => got.push(
                    serde_json::from_str(t.as_str()).map_err(|e| RemoteError::Protocol(e.to_string()))?,
                ),
                Message::Pong(p) if p.as_ref() == marker.as_slice() => return Ok(got),
                Message::Close(_) => break,
                _ => {}
            }
        }
        Err(RemoteError::Protocol("connection closed".into()))
    }
}

pub struct RemoteOptions {
    pub base: String,
    pub policy: Policy,
    pub seed: u64,
    pub email: Option<String>,
    pub password: String,
}

fn decode<T: for<'de> serde::Deserialize<'de>>(m: &WireMessage) -> Result<T, RemoteError> {
    m.decode().map_err(|e| RemoteError::Protocol(format!("{} payload: {e}", m.kind)))
}

/// Registers a fresh player, passes the gate with the bundled masked
/// fixture, starts a round at the first fix and walks the trace.
pub async fn replay(
    trace: &[TracePoint],
    bank: &[Question],
    opts: &RemoteOptions,
) -> Result<Transcript, RemoteError> {
    let by_id: HashMap<QuestionId, &Question> = bank.iter().map(|q| (q.id, q)).collect();
    let mut answers = ChaCha8Rng::seed_from_u64(opts.seed);
    answers.set_stream(1);

    let mut client = Client::new(&opts.base);
    let email = opts
        .email
        .clone()
        .unwrap_or_else(|| format!("sim-{}@example.invalid", uuid::Uuid::new_v4().simple()));
    client.register_and_login(&email, &opts.password).await?;
    let gate: GateResponse = client
        .post("/gate/mask", &GateRequest { landmarks: Some(to_doc(&masked_fixture())), image_ref: None })
        .await?;
    let center = trace.first().map_or_else(super::default_center, |p| p.position);
    let start: SessionView = client
        .post("/session/start", &StartRequest { verdict_id: Some(gate.verdict_id), center })
        .await?;
    let mut events = vec![Event::Started { center, durians: start.durians.clone() }];
    let mut live = Live::connect(&client.live_url()).await?;

    let mut fixes = 0;
    let mut phase = start.phase;
    let mut pending = None;
    for p in trace {
        if phase != Phase::Playing {
            break;
        }
        fixes += 1;
        let t = p.t.0;
        let fix = FixPayload { lat: p.position.lat(), lon: p.position.lon(), t };
        let mut inbox = live.exchange(MessageType::Fix, fix).await?;
        while !inbox.is_empty() {
            let mut next = Vec::new();
            for m in inbox {
                if m.is(MessageType::Alert) {
                    let a: AlertPayload = decode(&m)?;
                    events.push(Event::Alert { alert: a.alert });
                } else if m.is(MessageType::ScoreUpdate) {
                    let s: ScoreUpdate = decode(&m)?;
                    if s.player_id.0 == start.player_id.0 {
                        events.push(Event::Score { points_total: s.points_total });
                    }
                } else if m.is(MessageType::Error) {
                    let e: ErrorPayload = decode(&m)?;
                    events.push(Event::Rejected { t, code: e.code, message: e.message });
                } else if m.is(MessageType::CaptureResult) {
                    let r: CaptureResult = decode(&m)?;
                    phase = r.phase;
                    if let Some((question, answer_index)) = pending.take() {
                        events.push(Event::Capture {
                            t,
                            durian: r.durian_id,
                            question,
                            answer_index,
                            captured: r.captured,
                            hp: r.hp,
                            points_earned: r.points_earned,
                        });
                    }
                } else if m.is(MessageType::QuestionIssued) {
                    let q: QuestionIssued = decode(&m)?;
                    let full = by_id.get(&q.question.id).ok_or(RemoteError::UnknownQuestion(q.question.id))?;
                    let answer_index = opts.policy.answer(full, &mut answers);
                    events.push(Event::Question { t, durian: q.durian_id, question: q.question.id });
                    pending = Some((q.question.id, answer_index));
                    let answer = AnswerPayload { durian_id: q.durian_id, question_id: q.question.id, answer_index };
                    next.extend(live.exchange(MessageType::CaptureAnswer, answer).await?);
                }
            }
            inbox = next;
        }
    }

    let view: SessionView = client.get("/session").await?;
    let count = |s| view.durians.iter().filter(|d| d.state == s).count();
    Ok(Transcript {
        mode: format!("remote {}", opts.base),
        policy: opts.policy,
        seed: opts.seed,
        fixes,
        events,
        final_state: FinalState {
            phase: view.phase,
            hp: view.hp,
            hp_start: view.hp_start,
            points_earned: view.points_earned,
            wrong_answers: view.wrong_answers,
            captured: count(DurianState::Captured),
            failed: count(DurianState::Failed),
            active: count(DurianState::Active),
        },
    })
}
