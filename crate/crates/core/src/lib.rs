//! Game logic for a location-based hygiene game.
//!
//! Everything here is pure: positions, random sources and road data come in
//! as arguments, and new values come out. The crate is `no_std` and only needs
//! an allocator, so the same logic runs inside the server, the simulator and
//! anything embedded that can provide `alloc`.
//!
//! * [`geo`] - spherical distances, destination points, local planar frames
//!   and area-uniform annulus sampling.
//! * [`spawn`] - placing a round of durians around a player.
//! * [`roads`] - indexed road polylines and snapping unreachable durians.
//! * [`mask`] - classifying a facial-landmark confidence vector.
//! * [`session`] - the per-player round state machine.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod geo;
pub mod mask;
pub mod roads;
pub mod session;
pub mod spawn;

pub use geo::{AnnulusSpec, GeoError, GeoPoint, LocalFrame, RadialLaw};
pub use mask::{Landmark, LandmarkSet, MaskThresholds, MaskVerdict};
pub use roads::{RoadError, RoadNetwork, RoadSegment, SegmentId, SnapResult};
pub use session::{GameConfig, GameSession, Phase, Question, QuestionId, SessionError};
pub use spawn::{Durian, DurianId, DurianSet, DurianState, SpawnError};
