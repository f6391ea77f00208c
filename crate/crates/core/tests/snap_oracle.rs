//! Nearest-road queries against a dense brute-force sampling of every road.

mod common;

use common::cosine_law_distance;
use durian_core::geo::{destination_point, haversine_distance, LocalFrame};
use durian_core::roads::synth::{grid_edges, grid_streets};
use durian_core::roads::{RoadNetwork, RoadSegment, SegmentId};
use durian_core::spawn::{spawn_round, DurianState, SpawnParams};
use durian_core::{AnnulusSpec, GeoPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP_M: f64 = 0.5;

fn origin() -> GeoPoint {
    GeoPoint::new(36.0650, 120.3800).unwrap()
}

/// Minimum distance from `p` to points sampled every half meter along every
/// edge of every segment, endpoints included.
fn brute_force(net: &RoadNetwork, p: GeoPoint) -> f64 {
    let mut best = f64::INFINITY;
    for seg in net.segments() {
        for w in seg.polyline().windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = haversine_distance(a, b);
            let steps = (len / STEP_M).ceil() as usize;
            for k in 0..=steps {
                let t = k as f64 / steps as f64;
                let q = GeoPoint::new(
                    a.lat() + t * (b.lat() - a.lat()),
                    a.lon() + t * (b.lon() - a.lon()),
                )
                .unwrap();
                best = best.min(haversine_distance(p, q));
            }
        }
    }
    best
}

fn on_segment(seg: &RoadSegment, q: GeoPoint) -> bool {
    seg.polyline().windows(2).any(|w| {
        let (a, b) = (w[0], w[1]);
        let (dx, dy) = (b.lon() - a.lon(), b.lat() - a.lat());
        let t = ((q.lon() - a.lon()) * dx + (q.lat() - a.lat()) * dy) / (dx * dx + dy * dy);
        let t = t.clamp(0.0, 1.0);
        let (px, py) = (a.lon() + t * dx, a.lat() + t * dy);
        (px - q.lon()).abs() < 1e-6 && (py - q.lat()).abs() < 1e-6
    })
}

#[test]
fn grid_queries_match_brute_force() {
    let net = RoadNetwork::new(grid_streets(origin(), 12, 60.0), 50.0).unwrap();
    let frame = LocalFrame::new(origin());
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let q = frame.from_local(rng.gen_range(-100.0..760.0), rng.gen_range(-100.0..760.0));
        let snap = net.nearest_on_roads(q);
        let oracle = brute_force(&net, q);
        assert!(snap.distance_from_query <= oracle + 0.1, "{} vs {}", snap.distance_from_query, oracle);
        assert!((snap.distance_from_query - haversine_distance(q, snap.point)).abs() < 0.1);
        assert!((snap.distance_from_query - cosine_law_distance(q, snap.point)).abs() < 0.1);
        assert!(on_segment(net.segment(snap.segment_id).unwrap(), snap.point));
    }
}

#[test]
fn ten_thousand_segments_load_and_answer() {
    // 71 x 71 lattice, 2 * 71 * 70 = 9940 block edges.
    let segments = grid_edges(origin(), 71, 30.0);
    assert!(segments.len() >= 9_900);
    let net = RoadNetwork::new(segments, 50.0).unwrap();
    let frame = LocalFrame::new(origin());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let q = frame.from_local(rng.gen_range(0.0..2100.0), rng.gen_range(0.0..2100.0));
        let snap = net.nearest_on_roads(q);
        assert!(snap.distance_from_query <= 15.0 + 1e-6);
        assert!(snap.distance_from_query <= brute_force(&net, q) + 0.1);
    }
}

#[test]
fn durian_in_park_moves_to_boundary_road() {
    // A 700 m square park ringed by a road; the durian sits 300 m inside the
    // southern edge, 350 m from the others.
    let frame = LocalFrame::new(origin());
    let corner = |x, y| frame.from_local(x, y);
    let ring = vec![
        corner(0.0, 0.0),
        corner(700.0, 0.0),
        corner(700.0, 700.0),
        corner(0.0, 700.0),
        corner(0.0, 0.0),
    ];
    let net = RoadNetwork::new(vec![RoadSegment::new(SegmentId(0), ring, Some("Park Ring".into())).unwrap()], 50.0)
        .unwrap();

    let center = corner(350.0, 150.0);
    let spec = AnnulusSpec::new(center, 30.0, 200.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut set = spawn_round(center, &spec, &SpawnParams { count: 1, d_min: 0.0, ..Default::default() }, &mut rng)
        .unwrap();
    set.durians[0].position = corner(350.0, 300.0);

    let expected = net.nearest_on_roads(set.durians[0].position);
    assert!((expected.distance_from_query - 300.0).abs() < 0.5);
    let out = net.snap_to_roads(&set);
    assert!(out.durians[0].snapped);
    assert_eq!(out.durians[0].position, expected.point);
    assert!((frame.to_local(expected.point).1).abs() < 0.01);
}

#[test]
fn snapping_is_idempotent_and_preserves_state() {
    let net = RoadNetwork::new(grid_streets(origin(), 8, 150.0), 50.0).unwrap();
    let frame = LocalFrame::new(origin());
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let c = frame.from_local(rng.gen_range(0.0..1050.0), rng.gen_range(0.0..1050.0));
        let spec = AnnulusSpec::new(c, 30.0, 200.0).unwrap();
        let mut set = spawn_round(c, &spec, &SpawnParams::default(), &mut rng).unwrap();
        set.durians[0].state = DurianState::Captured;
        set.durians[0].position = destination_point(c, 45.0, 400.0);
        let once = net.snap_to_roads(&set);
        assert_eq!(net.snap_to_roads(&once), once);
        assert_eq!(once.durians[0], set.durians[0]);
        assert_eq!(once.len(), set.len());
        for (a, b) in set.durians.iter().zip(&once.durians) {
            assert_eq!(a.state, b.state);
            if a.position != b.position {
                assert!(b.snapped);
                assert!(net.nearest_on_roads(a.position).distance_from_query > 50.0);
            }
        }
    }
}
