//! HTTP and WebSocket front end over the game engine and player store.

mod error;
mod live;
pub mod protocol;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::routing::{get, post};
use axum::{Json, Router};
use durian_core::mask::classify_mask;
use durian_core::session::{PlayerId, SessionRegistry, Timestamp};
use durian_core::{DurianId, DurianSet, GeoPoint, MaskVerdict, Question, RoadNetwork};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use tokio::sync::broadcast;

pub use error::ApiError;
use protocol::*;

use crate::config::Settings;
use crate::formats::landmarks::from_doc;
use crate::gate::{gate_entry, GateError, LandmarkProvider};
use crate::store::{AccountView, LeaderboardEntry, PlayerStore, ShopItem};

const SCORE_LEADERBOARD_SIZE: usize = 10;
const DEFAULT_TOP: usize = 10;
const MAX_TOP: usize = 1000;

struct Games {
    registry: SessionRegistry,
    verdicts: HashMap<String, (PlayerId, MaskVerdict)>,
    rng: ChaCha8Rng,
}

pub struct AppState {
    settings: Settings,
    store: Arc<PlayerStore>,
    roads: Option<Arc<RoadNetwork>>,
    bank: Arc<Vec<Question>>,
    provider: Option<Arc<dyn LandmarkProvider>>,
    games: Mutex<Games>,
    scores: broadcast::Sender<ScoreUpdate>,
}

/// Outcome of a capture answer, before the store is credited.
pub struct AnswerOutcome {
    pub result: CaptureResult,
    pub question: Option<QuestionIssued>,
    pub durians: DurianUpdate,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl AppState {
    /// `seed` fixes the spawn and question randomness; `None` seeds from the OS.
    pub fn new(
        settings: Settings,
        store: Arc<PlayerStore>,
        roads: Option<Arc<RoadNetwork>>,
        bank: Vec<Question>,
        provider: Option<Arc<dyn LandmarkProvider>>,
        seed: Option<u64>,
    ) -> Arc<AppState> {
        let rng = match seed {
            Some(s) => ChaCha8Rng::seed_from_u64(s),
            None => ChaCha8Rng::from_entropy(),
        };
        let (scores, _) = broadcast::channel(1024);
        Arc::new(AppState {
            settings,
            store,
            roads,
            bank: Arc::new(bank),
            provider,
            games: Mutex::new(Games {
                registry: SessionRegistry::new(),
                verdicts: HashMap::new(),
                rng,
            }),
            scores,
        })
    }

    pub fn store(&self) -> &PlayerStore {
        &self.store
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn subscribe_scores(&self) -> broadcast::Receiver<ScoreUpdate> {
        self.scores.subscribe()
    }

    fn games(&self) -> MutexGuard<'_, Games> {
        self.games.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn session(&self, player: &PlayerId) -> Result<SessionView, ApiError> {
        self.games()
            .registry
            .get(player)
            .map(SessionView::from)
            .ok_or_else(ApiError::no_session)
    }

    pub async fn gate(&self, player: &PlayerId, req: GateRequest) -> Result<GateResponse, ApiError> {
        let thresholds = self.settings.thresholds();
        let verdict = match (req.landmarks, req.image_ref) {
            (Some(doc), None) => {
                let set = from_doc(&doc).map_err(|e| ApiError::bad_request(e.to_string()))?;
                classify_mask(&set, &thresholds)
            }
            (None, Some(image_ref)) => {
                let provider = self.provider.as_deref().ok_or_else(ApiError::no_provider)?;
                gate_entry(provider, &image_ref, &thresholds, self.settings.gate_timeout()).await?
            }
            _ => return Err(ApiError::bad_request("send exactly one of landmarks or image_ref")),
        };
        let verdict_id = uuid::Uuid::new_v4().simple().to_string();
        self.games()
            .verdicts
            .insert(verdict_id.clone(), (player.clone(), verdict.clone()));
        Ok(GateResponse { verdict_id, admitted: verdict.admits(), verdict })
    }

    /// Starts a round from a verdict this player obtained. The verdict is
    /// used up whether or not the round starts.
    pub fn start(
        &self,
        player: &PlayerId,
        verdict_id: Option<&str>,
        center: GeoPoint,
    ) -> Result<SessionView, ApiError> {
        let mut games = self.games();
        let verdict = match verdict_id.and_then(|id| games.verdicts.get(id)) {
            Some((owner, v)) if owner == player => v.clone(),
            _ => return Err(ApiError::gate_required()),
        };
        let games = &mut *games;
        let config = self.settings.game();
        let session = games.registry.start(
            player.clone(),
            center,
            &verdict,
            &config,
            self.roads.as_deref(),
            &mut games.rng,
        )?;
        let view = SessionView::from(&*session);
        games.verdicts.remove(verdict_id.expect("matched above"));
        Ok(view)
    }

    pub fn respawn(&self, player: &PlayerId, durian: DurianId) -> Result<DurianSet, ApiError> {
        let mut games = self.games();
        let games = &mut *games;
        let session = games.registry.get_mut(player).ok_or_else(ApiError::no_session)?;
        Ok(session.respawn(durian, self.roads.as_deref(), &mut games.rng)?.clone())
    }

    /// Records a fix. Entering the capture radius with no question pending
    /// issues one for the nearest durian.
    pub fn fix(
        &self,
        player: &PlayerId,
        fix: FixPayload,
        ref_seq: Option<u64>,
    ) -> Result<FixResponse, ApiError> {
        let p = GeoPoint::new(fix.lat, fix.lon).map_err(|e| ApiError::bad_request(e.to_string()))?;
        let mut games = self.games();
        let games = &mut *games;
        let session = games.registry.get_mut(player).ok_or_else(ApiError::no_session)?;
        let alerts = session.report_fix(p, Timestamp(fix.t))?;
        let question = issue_if_near(session, &self.bank, &mut games.rng, ref_seq)?;
        Ok(FixResponse { alerts, question })
    }

    /// Applies an answer to the round. Points are credited separately by
    /// [`AppState::credit_capture`].
    pub fn answer(
        &self,
        player: &PlayerId,
        answer: AnswerPayload,
        ref_seq: Option<u64>,
    ) -> Result<AnswerOutcome, ApiError> {
        let mut games = self.games();
        let games = &mut *games;
        let session = games.registry.get_mut(player).ok_or_else(ApiError::no_session)?;
        let outcome =
            session.attempt_capture(answer.durian_id, answer.question_id, answer.answer_index)?;
        let result = CaptureResult::new(&outcome, session, ref_seq);
        let question = issue_if_near(session, &self.bank, &mut games.rng, ref_seq)?;
        let durians = DurianUpdate {
            ref_seq,
            phase: session.phase(),
            durians: session.durians().map(|d| d.durians.clone()).unwrap_or_default(),
        };
        Ok(AnswerOutcome { result, question, durians })
    }

    /// Credits one point for a capture and tells every live client.
    pub fn credit_capture(&self, player: &PlayerId) -> Result<AccountView, ApiError> {
        let account = self.store.credit_points(player, 1)?;
        self.broadcast_score(&account);
        Ok(account)
    }

    pub fn purchase(&self, player: &PlayerId, item_id: &str) -> Result<AccountView, ApiError> {
        let account = self.store.purchase(player, item_id)?;
        self.broadcast_score(&account);
        Ok(account)
    }

    fn broadcast_score(&self, account: &AccountView) {
        let update = ScoreUpdate {
            player_id: account.player_id.clone(),
            points_total: account.points_total,
            level: account.level,
            leaderboard: self.store.leaderboard(SCORE_LEADERBOARD_SIZE),
            at_ms: now_ms(),
        };
        // No receivers is fine.
        let _ = self.scores.send(update);
    }
}

fn issue_if_near(
    session: &mut durian_core::GameSession,
    bank: &[Question],
    rng: &mut ChaCha8Rng,
    ref_seq: Option<u64>,
) -> Result<Option<QuestionIssued>, ApiError> {
    if session.phase() != durian_core::Phase::Playing || session.issued_question().is_some() {
        return Ok(None);
    }
    let Some(fix) = session.last_fix() else { return Ok(None) };
    let Some((durian_id, distance)) = session.nearest_active(fix.position) else {
        return Ok(None);
    };
    if distance > session.config().capture_radius {
        return Ok(None);
    }
    let q = session.next_question(bank, rng)?;
    Ok(Some(QuestionIssued { ref_seq, durian_id, distance, question: QuestionView::from(&q) }))
}

/// The caller, identified by `Authorization: Bearer <token>`.
pub struct Authed(pub PlayerId);

impl FromRequestParts<Arc<AppState>> for Authed {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, ApiError> {
        let token = parts
            .headers
            .get(axum::http::header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(ApiError::unauthorized)?;
        Ok(Authed(state.store.authenticate(token.trim())?))
    }
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    b.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn register(
    State(s): State<Arc<AppState>>,
    b: Result<Json<RegisterRequest>, JsonRejection>,
) -> Result<Json<AccountView>, ApiError> {
    let req = body(b)?;
    let store = s.store.clone();
    let view = tokio::task::spawn_blocking(move || store.register(&req.email, &req.password, &req.locale))
        .await
        .map_err(ApiError::internal)??;
    Ok(Json(view))
}

async fn login(
    State(s): State<Arc<AppState>>,
    b: Result<Json<LoginRequest>, JsonRejection>,
) -> Result<Json<LoginResponse>, ApiError> {
    let req = body(b)?;
    let store = s.store.clone();
    let token = tokio::task::spawn_blocking(move || store.login(&req.email, &req.password))
        .await
        .map_err(ApiError::internal)??;
    let player_id = s.store.authenticate(&token)?;
    Ok(Json(LoginResponse { token, player_id }))
}

async fn account(State(s): State<Arc<AppState>>, Authed(p): Authed) -> Result<Json<AccountView>, ApiError> {
    Ok(Json(s.store.account(&p)?))
}

async fn gate_mask(
    State(s): State<Arc<AppState>>,
    Authed(p): Authed,
    b: Result<Json<GateRequest>, JsonRejection>,
) -> Result<Json<GateResponse>, ApiError> {
    Ok(Json(s.gate(&p, body(b)?).await?))
}

async fn session_start(
    State(s): State<Arc<AppState>>,
    Authed(p): Authed,
    b: Result<Json<StartRequest>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let req = body(b)?;
    Ok(Json(s.start(&p, req.verdict_id.as_deref(), req.center)?))
}

async fn session_get(State(s): State<Arc<AppState>>, Authed(p): Authed) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(s.session(&p)?))
}

async fn session_respawn(
    State(s): State<Arc<AppState>>,
    Authed(p): Authed,
    Path(durian): Path<u32>,
) -> Result<Json<DurianSet>, ApiError> {
    Ok(Json(s.respawn(&p, DurianId(durian))?))
}

async fn session_fix(
    State(s): State<Arc<AppState>>,
    Authed(p): Authed,
    b: Result<Json<FixPayload>, JsonRejection>,
) -> Result<Json<FixResponse>, ApiError> {
    Ok(Json(s.fix(&p, body(b)?, None)?))
}

async fn session_capture(
    State(s): State<Arc<AppState>>,
    Authed(p): Authed,
    b: Result<Json<AnswerPayload>, JsonRejection>,
) -> Result<Json<AnswerResponse>, ApiError> {
    let out = s.answer(&p, body(b)?, None)?;
    if out.result.captured {
        let st = s.clone();
        let player = p.clone();
        tokio::task::spawn_blocking(move || st.credit_capture(&player))
            .await
            .map_err(ApiError::internal)??;
    }
    Ok(Json(AnswerResponse { result: out.result, question: out.question }))
}

#[derive(Deserialize)]
struct TopQuery {
    top: Option<usize>,
}

async fn leaderboard(
    State(s): State<Arc<AppState>>,
    q: Result<Query<TopQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<Vec<LeaderboardEntry>>, ApiError> {
    let Query(q) = q.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let top = q.top.unwrap_or(DEFAULT_TOP).min(MAX_TOP);
    Ok(Json(s.store.leaderboard(top)))
}

async fn shop_items(State(s): State<Arc<AppState>>) -> Json<Vec<ShopItem>> {
    Json(s.store.catalog().to_vec())
}

async fn shop_purchase(
    State(s): State<Arc<AppState>>,
    Authed(p): Authed,
    b: Result<Json<PurchaseRequest>, JsonRejection>,
) -> Result<Json<AccountView>, ApiError> {
    let req = body(b)?;
    let st = s.clone();
    let view = tokio::task::spawn_blocking(move || st.purchase(&p, &req.item_id))
        .await
        .map_err(ApiError::internal)??;
    Ok(Json(view))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/auth/register", post(register))
        .route("/auth/login", post(login))
        .route("/account", get(account))
        .route("/gate/mask", post(gate_mask))
        .route("/session", get(session_get))
        .route("/session/start", post(session_start))
        .route("/session/respawn/{durian_id}", post(session_respawn))
        .route("/session/fix", post(session_fix))
        .route("/session/capture", post(session_capture))
        .route("/leaderboard", get(leaderboard))
        .route("/shop/items", get(shop_items))
        .route("/shop/purchase", post(shop_purchase))
        .route("/live", get(live::upgrade))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    use axum::serve::ListenerExt;
    let listener = listener.tap_io(|tcp| {
        let _ = tcp.set_nodelay(true);
    });
    axum::serve(listener, router(state)).await
}

impl From<GateError> for ApiError {
    fn from(e: GateError) -> Self {
        ApiError::gate(e)
    }
}
