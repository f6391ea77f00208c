//! Placing a round of durians around a player.
//!
//! Positions are drawn from the annulus with rejection against a minimum
//! pairwise separation, so each durian's marginal law stays area-uniform
//! apart from the exclusion zones.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use thiserror::Error;

use crate::geo::{haversine_distance, sample_annulus_with, AnnulusSpec, GeoPoint, RadialLaw};

pub const DEFAULT_ROUND_SIZE: usize = 6;
pub const DEFAULT_MIN_SEPARATION_M: f64 = 25.0;
/// Rejections tolerated while placing a single durian.
pub const DEFAULT_MAX_ATTEMPTS: u32 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct DurianId(pub u32);

impl fmt::Display for DurianId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DurianState {
    Active,
    Captured,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Durian {
    pub id: DurianId,
    pub position: GeoPoint,
    pub state: DurianState,
    /// Set once the position was moved onto a road.
    pub snapped: bool,
}

impl Durian {
    pub fn is_active(&self) -> bool {
        self.state == DurianState::Active
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpawnError {
    #[error("round size must be at least 1")]
    EmptyRound,
    #[error("invalid minimum separation {0}")]
    InvalidSeparation(f64),
    #[error("could not place durian {placed} of {count} with separation {d_min} m after {attempts} attempts")]
    InfeasibleSeparation {
        placed: usize,
        count: usize,
        d_min: f64,
        attempts: u32,
    },
    #[error("unknown durian {0}")]
    UnknownDurian(DurianId),
    #[error("durian {0} is not active")]
    NotActive(DurianId),
}

/// Knobs for [`spawn_round`] beyond the annulus itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpawnParams {
    pub count: usize,
    pub d_min: f64,
    pub max_attempts: u32,
    pub law: RadialLaw,
}

impl Default for SpawnParams {
    fn default() -> Self {
        SpawnParams {
            count: DEFAULT_ROUND_SIZE,
            d_min: DEFAULT_MIN_SEPARATION_M,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            law: RadialLaw::AreaUniform,
        }
    }
}

/// The durians of one round together with where they were spawned.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DurianSet {
    pub durians: Vec<Durian>,
    pub spawn_center: GeoPoint,
    pub spawn_spec: AnnulusSpec,
    pub d_min: f64,
}

impl DurianSet {
    pub fn get(&self, id: DurianId) -> Option<&Durian> {
        self.durians.iter().find(|d| d.id == id)
    }

    pub(crate) fn get_mut(&mut self, id: DurianId) -> Option<&mut Durian> {
        self.durians.iter_mut().find(|d| d.id == id)
    }

    pub fn len(&self) -> usize {
        self.durians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durians.is_empty()
    }

    pub fn active(&self) -> impl Iterator<Item = &Durian> {
        self.durians.iter().filter(|d| d.is_active())
    }

    pub fn count_in(&self, state: DurianState) -> usize {
        self.durians.iter().filter(|d| d.state == state).count()
    }

    /// Smallest distance between any two durians, `None` for fewer than two.
    pub fn min_separation(&self) -> Option<f64> {
        min_pairwise(self.durians.iter().map(|d| d.position))
    }
}

pub(crate) fn min_pairwise(points: impl Iterator<Item = GeoPoint> + Clone) -> Option<f64> {
    let pts: Vec<GeoPoint> = points.collect();
    let mut best: Option<f64> = None;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let d = haversine_distance(*a, *b);
            best = Some(best.map_or(d, |m: f64| m.min(d)));
        }
    }
    best
}

fn far_enough(candidate: GeoPoint, others: &[GeoPoint], d_min: f64) -> bool {
    d_min <= 0.0 || others.iter().all(|o| haversine_distance(candidate, *o) >= d_min)
}

fn place<R: Rng + ?Sized>(
    spec: &AnnulusSpec,
    others: &[GeoPoint],
    params: &SpawnParams,
    rng: &mut R,
) -> Option<GeoPoint> {
    (0..params.max_attempts.max(1))
        .map(|_| sample_annulus_with(spec, params.law, rng))
        .find(|&p| far_enough(p, others, params.d_min))
}

/// Spawns `params.count` durians in `spec` around `center`, each at least
/// `params.d_min` meters from every other.
pub fn spawn_round<R: Rng + ?Sized>(
    center: GeoPoint,
    spec: &AnnulusSpec,
    params: &SpawnParams,
    rng: &mut R,
) -> Result<DurianSet, SpawnError> {
    if params.count == 0 {
        return Err(SpawnError::EmptyRound);
    }
    if !params.d_min.is_finite() || params.d_min < 0.0 {
        return Err(SpawnError::InvalidSeparation(params.d_min));
    }
    let spec = spec.recentered(center);
    let mut placed: Vec<GeoPoint> = Vec::with_capacity(params.count);
    while placed.len() < params.count {
        let p = place(&spec, &placed, params, rng).ok_or(SpawnError::InfeasibleSeparation {
            placed: placed.len(),
            count: params.count,
            d_min: params.d_min,
            attempts: params.max_attempts,
        })?;
        placed.push(p);
    }
    let durians = placed
        .into_iter()
        .enumerate()
        .map(|(i, position)| Durian {
            id: DurianId(i as u32 + 1),
            position,
            state: DurianState::Active,
            snapped: false,
        })
        .collect();
    Ok(DurianSet {
        durians,
        spawn_center: center,
        spawn_spec: spec,
        d_min: params.d_min,
    })
}

/// Draws a fresh position for one active durian, keeping the others as they
/// are.
pub fn respawn_one<R: Rng + ?Sized>(
    set: &DurianSet,
    id: DurianId,
    max_attempts: u32,
    rng: &mut R,
) -> Result<DurianSet, SpawnError> {
    let target = set.get(id).ok_or(SpawnError::UnknownDurian(id))?;
    if !target.is_active() {
        return Err(SpawnError::NotActive(id));
    }
    let others: Vec<GeoPoint> = set
        .durians
        .iter()
        .filter(|d| d.id != id)
        .map(|d| d.position)
        .collect();
    let params = SpawnParams {
        count: 1,
        d_min: set.d_min,
        max_attempts,
        law: RadialLaw::AreaUniform,
    };
    let position = place(&set.spawn_spec, &others, &params, rng).ok_or(
        SpawnError::InfeasibleSeparation {
            placed: set.len() - 1,
            count: set.len(),
            d_min: set.d_min,
            attempts: max_attempts,
        },
    )?;
    let mut next = set.clone();
    if let Some(d) = next.get_mut(id) {
        d.position = position;
        d.snapped = false;
    }
    Ok(next)
}
