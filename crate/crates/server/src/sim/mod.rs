//! Headless drivers: trace replay, walking-tour generation and the spawn
//! distribution experiment.

pub mod dist;
pub mod remote;

use durian_core::geo::{destination_point, haversine_distance, initial_bearing};
use durian_core::mask::classify_mask;
use durian_core::session::{Alert, CaptureOutcome, Phase, Timestamp};
use durian_core::{
    DurianId, DurianSet, DurianState, GameConfig, GameSession, GeoPoint, MaskThresholds, Question,
    QuestionId, RoadNetwork, SessionError,
};
use durian_core::session::PlayerId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::formats::landmarks::masked_fixture;
use crate::formats::trace::TracePoint;

/// Arbitrary campus location used when no center is given.
pub const DEFAULT_CENTER: (f64, f64) = (37.4275, -122.1697);

pub fn default_center() -> GeoPoint {
    GeoPoint::new(DEFAULT_CENTER.0, DEFAULT_CENTER.1).expect("valid constant")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    AlwaysCorrect,
    AlwaysWrong,
    /// Correct with the given probability.
    PCorrect(f64),
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "always-correct" => Ok(Policy::AlwaysCorrect),
            "always-wrong" => Ok(Policy::AlwaysWrong),
            _ => {
                let p = s
                    .strip_prefix("p-correct=")
                    .or_else(|| s.strip_prefix("p-correct:"))
                    .ok_or_else(|| format!("unknown policy {s:?}"))?;
                let p: f64 = p.parse().map_err(|e| format!("policy {s:?}: {e}"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("policy {s:?}: probability outside [0, 1]"));
                }
                Ok(Policy::PCorrect(p))
            }
        }
    }
}

impl Policy {
    /// Picks an answer index for `q`.
    pub fn answer<R: Rng + ?Sized>(self, q: &Question, rng: &mut R) -> usize {
        let wrong = (q.correct_index + 1) % q.choices.len();
        let correct = match self {
            Policy::AlwaysCorrect => true,
            Policy::AlwaysWrong => false,
            Policy::PCorrect(p) => rng.gen_bool(p),
        };
        if correct {
            q.correct_index
        } else {
            wrong
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Started { center: GeoPoint, durians: Vec<durian_core::Durian> },
    Alert { alert: Alert },
    Question { t: f64, durian: DurianId, question: QuestionId },
    Capture {
        t: f64,
        durian: DurianId,
        question: QuestionId,
        answer_index: usize,
        captured: bool,
        hp: f64,
        points_earned: u32,
    },
    Score { points_total: u64 },
    Rejected { t: f64, code: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub phase: Phase,
    pub hp: f64,
    pub hp_start: f64,
    pub points_earned: u32,
    pub wrong_answers: u32,
    pub captured: usize,
    pub failed: usize,
    pub active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub mode: String,
    pub policy: Policy,
    pub seed: u64,
    pub fixes: usize,
    pub events: Vec<Event>,
    #[serde(rename = "final")]
    pub final_state: FinalState,
}

impl Transcript {
    pub fn alerts(&self) -> impl Iterator<Item = &Alert> {
        self.events.iter().filter_map(|e| match e {
            Event::Alert { alert } => Some(alert),
            _ => None,
        })
    }

    pub fn captures(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| matches!(e, Event::Capture { .. }))
    }
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub config: GameConfig,
    pub thresholds: MaskThresholds,
    pub seed: u64,
    pub policy: Policy,
}

fn game_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn policy_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// The round an in-process replay (or a fresh server seeded with `seed`)
/// spawns at `center`.
pub fn plan_round(
    center: GeoPoint,
    config: &GameConfig,
    roads: Option<&RoadNetwork>,
    seed: u64,
) -> Result<DurianSet, SessionError> {
    let verdict = classify_mask(&masked_fixture(), &MaskThresholds::default());
    let session = GameSession::start(
        PlayerId("planner".into()),
        center,
        &verdict,
        config,
        roads,
        &mut game_rng(seed),
    )?;
    Ok(session.durians().expect("admitted").clone())
}

fn final_state(s: &GameSession) -> FinalState {
    let count = |state| s.durians().map_or(0, |d| d.count_in(state));
    FinalState {
        phase: s.phase(),
        hp: s.hp().as_f64(),
        hp_start: s.hp_start().as_f64(),
        points_earned: s.points_earned(),
        wrong_answers: s.wrong_answers(),
        captured: count(DurianState::Captured),
        failed: count(DurianState::Failed),
        active: count(DurianState::Active),
    }
}

/// Plays `trace` against an in-process session starting at its first fix.
pub fn replay(
    trace: &[TracePoint],
    bank: &[Question],
    roads: Option<&RoadNetwork>,
    opts: &ReplayOptions,
) -> Result<Transcript, SessionError> {
    let mut rng = game_rng(opts.seed);
    let mut answers = policy_rng(opts.seed);
    let center = trace.first().map_or_else(default_center, |p| p.position);
    let verdict = classify_mask(&masked_fixture(), &opts.thresholds);
    let mut session = GameSession::start(
        PlayerId("replay".into()),
        center,
        &verdict,
        &opts.config,
        roads,
        &mut rng,
    )?;
    let mut events = vec![Event::Started {
        center,
        durians: session.durians().map(|d| d.durians.clone()).unwrap_or_default(),
    }];
    let mut fixes = 0;
    for p in trace {
        if session.phase() != Phase::Playing {
            break;
        }
        fixes += 1;
        match session.report_fix(p.position, p.t) {
            Ok(alerts) => events.extend(alerts.into_iter().map(|alert| Event::Alert { alert })),
            Err(e) => {
                events.push(Event::Rejected { t: p.t.0, code: "FIX".into(), message: e.to_string() });
                continue;
            }
        }
        while session.phase() == Phase::Playing {
            let Some((durian, distance)) = session.nearest_active(p.position) else { break };
            if distance > session.config().capture_radius {
                break;
            }
            let q = session.next_question(bank, &mut rng)?;
            events.push(Event::Question { t: p.t.0, durian, question: q.id });
            let answer_index = opts.policy.answer(&q, &mut answers);
            let outcome = session.attempt_capture(durian, q.id, answer_index)?;
            events.push(Event::Capture {
                t: p.t.0,
                durian,
                question: q.id,
                answer_index,
                captured: matches!(outcome, CaptureOutcome::Captured { .. }),
                hp: session.hp().as_f64(),
                points_earned: session.points_earned(),
            });
        }
    }
    Ok(Transcript {
        mode: "in-process".into(),
        policy: opts.policy,
        seed: opts.seed,
        fixes,
        events,
        final_state: final_state(&session),
    })
}

/// A walk from `start` through every target, nearest first, advancing
/// `step_m` metres every `dt_s` seconds and stopping exactly on each target.
pub fn tour(start: GeoPoint, targets: &[GeoPoint], step_m: f64, dt_s: f64, t0: f64) -> Vec<TracePoint> {
    assert!(step_m > 0.0 && dt_s > 0.0);
    let mut left: Vec<GeoPoint> = targets.to_vec();
    let mut here = start;
    let mut t = t0;
    let mut out = vec![TracePoint { t: Timestamp(t), position: here }];
    while !left.is_empty() {
        let (k, _) = left
            .iter()
            .enumerate()
            .map(|(k, p)| (k, haversine_distance(here, *p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        let target = left.swap_remove(k);
        loop {
            let d = haversine_distance(here, target);
            t += dt_s;
            if d <= step_m {
                here = target;
                out.push(TracePoint { t: Timestamp(t), position: here });
                break;
            }
            here = destination_point(here, initial_bearing(here, target), step_m);
            out.push(TracePoint { t: Timestamp(t), position: here });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::questions::builtin_bank;

    fn opts(policy: Policy) -> ReplayOptions {
        ReplayOptions {
            config: GameConfig::default(),
            thresholds: MaskThresholds::default(),
            seed: 9,
            policy,
        }
    }

    #[test]
    fn policies_parse() {
        assert_eq!("always-correct".parse::<Policy>().unwrap(), Policy::AlwaysCorrect);
        assert_eq!("p-correct=0.25".parse::<Policy>().unwrap(), Policy::PCorrect(0.25));
        assert!("p-correct=2".parse::<Policy>().is_err());
        assert!("sometimes".parse::<Policy>().is_err());
    }

    #[test]
    fn tour_visits_every_target_at_walking_pace() {
        let c = default_center();
        let set = plan_round(c, &GameConfig::default(), None, 9).unwrap();
        let targets: Vec<_> = set.durians.iter().map(|d| d.position).collect();
        let trace = tour(c, &targets, 5.0, 5.0, 1_700_000_000.0);
        for t in &targets {
            assert!(trace.iter().any(|p| p.position == *t));
        }
        for w in trace.windows(2) {
            let v = haversine_distance(w[0].position, w[1].position) / (w[1].t.0 - w[0].t.0);
            assert!(v <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn correct_walker_collects_all() {
        let c = default_center();
        let set = plan_round(c, &GameConfig::default(), None, 9).unwrap();
        let targets: Vec<_> = set.durians.iter().map(|d| d.position).collect();
        let trace = tour(c, &targets, 5.0, 5.0, 0.0);
        let tr = replay(&trace, &builtin_bank(), None, &opts(Policy::AlwaysCorrect)).unwrap();
        assert_eq!(tr.final_state.phase, Phase::RoundComplete);
        assert_eq!(tr.final_state.points_earned, 6);
        assert_eq!(tr.final_state.captured, 6);
        match &tr.events[0] {
            Event::Started { durians, .. } => assert_eq!(durians, &set.durians),
            e => panic!("{e:?}"),
        }
    }
}
