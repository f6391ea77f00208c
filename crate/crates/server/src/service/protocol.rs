//! Wire types shared by the REST surface and the live channel.
//!
//! Every live frame is one JSON object `{"type": .., "seq": .., "payload": ..}`.
//! Clients send `Fix` and `CaptureAnswer`; the server sends the rest. `seq`
//! strictly increases per direction on a connection.

use durian_core::session::{Alert, CaptureOutcome, Phase, PlayerId};
use durian_core::{Durian, DurianId, GameSession, GeoPoint, MaskVerdict, Question, QuestionId};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::store::LeaderboardEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageType {
    Fix,
    CaptureAnswer,
    Alert,
    DurianUpdate,
    QuestionIssued,
    CaptureResult,
    ScoreUpdate,
    Error,
}

impl MessageType {
    pub fn from_client(name: &str) -> Option<MessageType> {
        match name {
            "Fix" => Some(MessageType::Fix),
            "CaptureAnswer" => Some(MessageType::CaptureAnswer),
            _ => None,
        }
    }
}

/// A frame as it travels. `kind` stays a string so unknown types can be
/// reported rather than rejected by the decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    #[serde(rename = "type")]
    pub kind: String,
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

impl WireMessage {
    pub fn new(kind: MessageType, seq: u64, payload: impl Serialize) -> WireMessage {
        WireMessage {
            kind: format!("{kind:?}"),
            seq,
            payload: serde_json::to_value(payload).expect("payloads serialize"),
        }
    }

    pub fn is(&self, kind: MessageType) -> bool {
        self.kind == format!("{kind:?}")
    }

    pub fn decode<T: for<'de> Deserialize<'de>>(&self) -> serde_json::Result<T> {
        T::deserialize(&self.payload)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixPayload {
    pub lat: f64,
    pub lon: f64,
    /// Seconds since the Unix epoch.
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerPayload {
    pub durian_id: DurianId,
    pub question_id: QuestionId,
    pub answer_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertPayload {
    pub ref_seq: Option<u64>,
    pub alert: Alert,
}

/// A question as shown to the player, without its answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionView {
    pub id: QuestionId,
    pub text: String,
    pub choices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locale: Option<String>,
}

impl From<&Question> for QuestionView {
    fn from(q: &Question) -> Self {
        QuestionView {
            id: q.id,
            text: q.text.clone(),
            choices: q.choices.clone(),
            locale: q.locale.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionIssued {
    pub ref_seq: Option<u64>,
    pub durian_id: DurianId,
    pub distance: f64,
    pub question: QuestionView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureResult {
    pub ref_seq: Option<u64>,
    pub durian_id: DurianId,
    pub captured: bool,
    pub points_earned: u32,
    pub hp: f64,
    pub phase: Phase,
}

impl CaptureResult {
    pub fn new(outcome: &CaptureOutcome, session: &GameSession, ref_seq: Option<u64>) -> Self {
        let durian_id = match outcome {
            CaptureOutcome::Captured { durian, .. } | CaptureOutcome::Wrong { durian, .. } => *durian,
        };
        CaptureResult {
            ref_seq,
            durian_id,
            captured: outcome.captured(),
            points_earned: session.points_earned(),
            hp: session.hp().as_f64(),
            phase: session.phase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurianUpdate {
    pub ref_seq: Option<u64>,
    pub phase: Phase,
    pub durians: Vec<Durian>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreUpdate {
    pub player_id: PlayerId,
    pub points_total: u64,
    pub level: u64,
    pub leaderboard: Vec<LeaderboardEntry>,
    /// Server clock when the update was produced, Unix milliseconds.
    pub at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub ref_seq: Option<u64>,
    pub code: String,
    pub message: String,
}

/// REST error body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub email: String,
    pub password: String,
    #[serde(default)]
    pub locale: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginRequest {
    pub email: String,
    pub password: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub player_id: PlayerId,
}

/// Either inline landmarks or a reference for the configured provider.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<crate::formats::landmarks::LandmarkDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateResponse {
    pub verdict_id: String,
    pub admitted: bool,
    pub verdict: MaskVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartRequest {
    #[serde(default)]
    pub verdict_id: Option<String>,
    pub center: GeoPoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixResponse {
    pub alerts: Vec<Alert>,
    pub question: Option<QuestionIssued>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub result: CaptureResult,
    pub question: Option<QuestionIssued>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PurchaseRequest {
    pub item_id: String,
}

/// What REST and the live channel report about a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub player_id: PlayerId,
    pub phase: Phase,
    pub hp: f64,
    pub hp_start: f64,
    pub points_earned: u32,
    pub wrong_answers: u32,
    pub spawn_center: Option<GeoPoint>,
    pub durians: Vec<Durian>,
    pub pending_question: Option<QuestionView>,
    pub alerts: Vec<Alert>,
}

impl From<&GameSession> for SessionView {
    fn from(s: &GameSession) -> Self {
        SessionView {
            player_id: s.player_id.clone(),
            phase: s.phase(),
            hp: s.hp().as_f64(),
            hp_start: s.hp_start().as_f64(),
            points_earned: s.points_earned(),
            wrong_answers: s.wrong_answers(),
            spawn_center: s.durians().map(|d| d.spawn_center),
            durians: s.durians().map(|d| d.durians.clone()).unwrap_or_default(),
            pending_question: s.issued_question().map(QuestionView::from),
            alerts: s.alerts().to_vec(),
        }
    }
}
