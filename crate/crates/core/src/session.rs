//! One player's round: mask-gated entry, movement monitoring, question
//! selection and capture.
//!
//! HP is kept in half points so that every change is an exact integer step.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use thiserror::Error;

use crate::geo::{haversine_distance, AnnulusSpec, GeoError, GeoPoint, RadialLaw};
use crate::mask::MaskVerdict;
use crate::roads::RoadNetwork;
use crate::spawn::{
    respawn_one, spawn_round, DurianId, DurianSet, DurianState, SpawnError, SpawnParams,
};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameConfig {
    pub round_size: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub d_min: f64,
    pub max_attempts: u32,
    pub capture_radius: f64,
    pub v_max: f64,
    pub hp_start: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            round_size: crate::spawn::DEFAULT_ROUND_SIZE,
            r_min: 30.0,
            r_max: 200.0,
            d_min: crate::spawn::DEFAULT_MIN_SEPARATION_M,
            max_attempts: crate::spawn::DEFAULT_MAX_ATTEMPTS,
            capture_radius: 15.0,
            v_max: 8.0,
            hp_start: 3.0,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |what: &'static str| Err(SessionError::InvalidConfig(what));
        if self.round_size == 0 {
            return bad("round_size must be positive");
        }
        if !(self.capture_radius > 0.0 && self.capture_radius.is_finite()) {
            return bad("capture_radius must be positive");
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return bad("v_max must be positive");
        }
        if Hp::from_f64(self.hp_start).is_none() {
            return bad("hp_start must be a positive multiple of 0.5");
        }
        if !(self.d_min >= 0.0 && self.d_min.is_finite()) {
            return bad("d_min must be non-negative");
        }
        AnnulusSpec::new(GeoPoint::normalized(0.0, 0.0), self.r_min, self.r_max)?;
        Ok(())
    }

    pub fn annulus(&self, center: GeoPoint) -> Result<AnnulusSpec, GeoError> {
        AnnulusSpec::new(center, self.r_min, self.r_max)
    }

    pub fn spawn_params(&self) -> SpawnParams {
        SpawnParams {
            count: self.round_size,
            d_min: self.d_min,
            max_attempts: self.max_attempts,
            law: RadialLaw::AreaUniform,
        }
    }
}

/// Health in half points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct Hp(u32);

impl Hp {
    pub const ZERO: Hp = Hp(0);

    pub fn from_f64(hp: f64) -> Option<Hp> {
        let halves = hp * 2.0;
        (hp > 0.0 && halves.is_finite() && libm::round(halves) == halves).then_some(Hp(halves as u32))
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn half_points(self) -> u32 {
        self.0
    }

    fn lose_half(self) -> Hp {
        Hp(self.0.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct PlayerId(pub String);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct QuestionId(pub u32);

impl fmt::Display for QuestionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Question {
    pub id: QuestionId,
    pub text: String,
    pub choices: Vec<String>,
    pub correct_index: usize,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub locale: Option<String>,
}

impl Question {
    pub fn validate(&self) -> Result<(), SessionError> {
        if self.choices.len() < 2 {
            return Err(SessionError::InvalidQuestion(self.id, "needs at least two choices"));
        }
        if self.correct_index >= self.choices.len() {
            return Err(SessionError::InvalidQuestion(self.id, "correct_index out of range"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum QuestionStatus {
    #[default]
    Unseen,
    AnsweredWrong,
    AnsweredRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Phase {
    AwaitingMaskGate,
    Playing,
    RoundComplete,
}

/// Seconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct Timestamp(pub f64);

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fix {
    pub position: GeoPoint,
    pub t: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AlertKind {
    /// Shown green.
    NearDurian,
    /// Shown red.
    AbnormalSpeed,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind"))]
pub enum Alert {
    NearDurian { t: Timestamp, durian: DurianId, distance: f64 },
    AbnormalSpeed { t: Timestamp, speed: f64 },
}

impl Alert {
    pub fn kind(&self) -> AlertKind {
        match self {
            Alert::NearDurian { .. } => AlertKind::NearDurian,
            Alert::AbnormalSpeed { .. } => AlertKind::AbnormalSpeed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CaptureOutcome {
    Captured { durian: DurianId, points_earned: u32 },
    Wrong { durian: DurianId, hp: Hp },
}

impl CaptureOutcome {
    pub fn captured(&self) -> bool {
        matches!(self, CaptureOutcome::Captured { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("player already has a round in progress")]
    AlreadyInSession,
    #[error("session is not in play")]
    NotPlaying,
    #[error("fix at t={got} is not after the previous fix at t={last}")]
    NonMonotonicTimestamp { last: f64, got: f64 },
    #[error("question bank is empty")]
    EmptyBank,
    #[error("durian is {distance:.1} m away, capture radius is {radius} m")]
    OutOfRange { distance: f64, radius: f64 },
    #[error("durian {0} is not active")]
    NotActive(DurianId),
    #[error("unknown durian {0}")]
    UnknownDurian(DurianId),
    #[error("question {0} was not issued for this attempt")]
    UnknownQuestion(QuestionId),
    #[error("question {0}: {1}")]
    InvalidQuestion(QuestionId, &'static str),
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Spawn(#[from] SpawnError),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameSession {
    pub player_id: PlayerId,
    durians: Option<DurianSet>,
    hp: Hp,
    hp_start: Hp,
    points_earned: u32,
    wrong_answers: u32,
    phase: Phase,
    history: BTreeMap<QuestionId, QuestionStatus>,
    last_fix: Option<Fix>,
    alerts: Vec<Alert>,
    issued: Option<Question>,
    config: GameConfig,
}

impl GameSession {
    /// Opens a round. A verdict that does not admit the player leaves the
    /// session waiting at the gate with no durians.
    pub fn start<R: Rng + ?Sized>(
        player_id: PlayerId,
        center: GeoPoint,
        verdict: &MaskVerdict,
        config: &GameConfig,
        roads: Option<&RoadNetwork>,
        rng: &mut R,
    ) -> Result<GameSession, SessionError> {
        config.validate()?;
        let hp_start = Hp::from_f64(config.hp_start).expect("validated");
        let (phase, durians) = if verdict.admits() {
            let spec = config.annulus(center)?;
            let set = spawn_round(center, &spec, &config.spawn_params(), rng)?;
            let set = match roads {
                Some(net) => net.snap_to_roads(&set),
                None => set,
            };
            (Phase::Playing, Some(set))
        } else {
            (Phase::AwaitingMaskGate, None)
        };
        Ok(GameSession {
            player_id,
            durians,
            hp: hp_start,
            hp_start,
            points_earned: 0,
            wrong_answers: 0,
            phase,
            history: BTreeMap::new(),
            last_fix: None,
            alerts: Vec::new(),
            issued: None,
            config: config.clone(),
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn durians(&self) -> Option<&DurianSet> {
        self.durians.as_ref()
    }

    pub fn hp(&self) -> Hp {
        self.hp
    }

    pub fn hp_start(&self) -> Hp {
        self.hp_start
    }

    pub fn points_earned(&self) -> u32 {
        self.points_earned
    }

    pub fn wrong_answers(&self) -> u32 {
        self.wrong_answers
    }

    pub fn last_fix(&self) -> Option<Fix> {
        self.last_fix
    }

    pub fn alerts(&self) -> &[Alert] {
        &self.alerts
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn issued_question(&self) -> Option<&Question> {
        self.issued.as_ref()
    }

    pub fn question_status(&self, id: QuestionId) -> QuestionStatus {
        self.history.get(&id).copied().unwrap_or_default()
    }

    fn playing(&self) -> Result<&DurianSet, SessionError> {
        match (&self.phase, &self.durians) {
            (Phase::Playing, Some(set)) => Ok(set),
            _ => Err(SessionError::NotPlaying),
        }
    }

    /// Nearest active durian to `p` and its distance.
    pub fn nearest_active(&self, p: GeoPoint) -> Option<(DurianId, f64)> {
        self.durians
            .as_ref()?
            .active()
            .map(|d| (d.id, haversine_distance(p, d.position)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }

    /// Records a position fix and returns the alerts it raised.
    pub fn report_fix(&mut self, p: GeoPoint, t: Timestamp) -> Result<Vec<Alert>, SessionError> {
        self.playing()?;
        if let Some(last) = self.last_fix {
            if !(t.0 > last.t.0) {
                return Err(SessionError::NonMonotonicTimestamp { last: last.t.0, got: t.0 });
            }
        }
        let mut raised = Vec::new();
        if let Some(last) = self.last_fix {
            let speed = haversine_distance(last.position, p) / (t.0 - last.t.0);
            if speed > self.config.v_max {
                raised.push(Alert::AbnormalSpeed { t, speed });
            }
        }
        if let Some((durian, distance)) = self.nearest_active(p) {
            if distance <= self.config.capture_radius {
                raised.push(Alert::NearDurian { t, durian, distance });
            }
        }
        self.last_fix = Some(Fix { position: p, t });
        self.alerts.extend(raised.iter().cloned());
        Ok(raised)
    }

    /// Picks a question uniformly among those not yet answered correctly and
    /// remembers it as the one the next capture attempt must answer. Once
    /// every question has been answered correctly the history starts over.
    pub fn next_question<R: Rng + ?Sized>(
        &mut self,
        bank: &[Question],
        rng: &mut R,
    ) -> Result<Question, SessionError> {
        self.playing()?;
        if bank.is_empty() {
            return Err(SessionError::EmptyBank);
        }
        let mut eligible: Vec<&Question> = bank
            .iter()
            .filter(|q| self.question_status(q.id) != QuestionStatus::AnsweredRight)
            .collect();
        if eligible.is_empty() {
            self.history.clear();
            eligible = bank.iter().collect();
        }
        let q = eligible[rng.gen_range(0..eligible.len())].clone();
        self.issued = Some(q.clone());
        Ok(q)
    }

    /// Answers the issued question for `durian`. A wrong answer costs half a
    /// point of HP and leaves the durian in play.
    pub fn attempt_capture(
        &mut self,
        durian: DurianId,
        question: QuestionId,
        answer_index: usize,
    ) -> Result<CaptureOutcome, SessionError> {
        let set = self.playing()?;
        let target = set.get(durian).ok_or(SessionError::UnknownDurian(durian))?;
        if !target.is_active() {
            return Err(SessionError::NotActive(durian));
        }
        let distance = self
            .last_fix
            .map_or(f64::INFINITY, |f| haversine_distance(f.position, target.position));
        if distance > self.config.capture_radius {
            return Err(SessionError::OutOfRange { distance, radius: self.config.capture_radius });
        }
        let issued = match &self.issued {
            Some(q) if q.id == question => q,
            _ => return Err(SessionError::UnknownQuestion(question)),
        };
        let correct = answer_index == issued.correct_index;
        self.issued = None;

        let set = self.durians.as_mut().expect("playing");
        let outcome = if correct {
            set.get_mut(durian).expect("checked").state = DurianState::Captured;
            self.points_earned += 1;
            self.history.insert(question, QuestionStatus::AnsweredRight);
            CaptureOutcome::Captured { durian, points_earned: self.points_earned }
        } else {
            self.hp = self.hp.lose_half();
            self.wrong_answers += 1;
            self.history.insert(question, QuestionStatus::AnsweredWrong);
            if self.hp == Hp::ZERO {
                for d in set.durians.iter_mut().filter(|d| d.is_active()) {
                    d.state = DurianState::Failed;
                }
            }
            CaptureOutcome::Wrong { durian, hp: self.hp }
        };
        if set.active().next().is_none() {
            self.phase = Phase::RoundComplete;
        }
        Ok(outcome)
    }

    /// Re-randomizes one active durian and, given roads, snaps it if it
    /// landed somewhere unreachable.
    pub fn respawn<R: Rng + ?Sized>(
        &mut self,
        durian: DurianId,
        roads: Option<&RoadNetwork>,
        rng: &mut R,
    ) -> Result<&DurianSet, SessionError> {
        let set = self.playing()?;
        let mut next = respawn_one(set, durian, self.config.max_attempts, rng)?;
        if let Some(net) = roads {
            next = net.snap_to_roads(&next);
        }
        Ok(self.durians.insert(next))
    }
}

/// Sessions keyed by player. At most one round in play per player.
#[derive(Debug, Default, Clone)]
pub struct SessionRegistry {
    sessions: BTreeMap<PlayerId, GameSession>,
}

impl SessionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts a round unless one is already being played. A session waiting
    /// at the gate or already complete is replaced.
    pub fn start<R: Rng + ?Sized>(
        &mut self,
        player_id: PlayerId,
        center: GeoPoint,
        verdict: &MaskVerdict,
        config: &GameConfig,
        roads: Option<&RoadNetwork>,
        rng: &mut R,
    ) -> Result<&mut GameSession, SessionError> {
        if self.sessions.get(&player_id).map(GameSession::phase) == Some(Phase::Playing) {
            return Err(SessionError::AlreadyInSession);
        }
        let session = GameSession::start(player_id.clone(), center, verdict, config, roads, rng)?;
        self.sessions.insert(player_id.clone(), session);
        Ok(self.sessions.get_mut(&player_id).expect("just inserted"))
    }

    pub fn get(&self, player_id: &PlayerId) -> Option<&GameSession> {
        self.sessions.get(player_id)
    }

    pub fn get_mut(&mut self, player_id: &PlayerId) -> Option<&mut GameSession> {
        self.sessions.get_mut(player_id)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}
