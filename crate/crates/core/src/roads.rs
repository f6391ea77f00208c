//! Road polylines, a packed bounding-box tree over them, and snapping of
//! unreachable durians onto the nearest road.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use thiserror::Error;

use crate::geo::{haversine_distance, GeoPoint, LocalFrame};
use crate::spawn::DurianSet;

/// Default distance beyond which a position counts as unreachable.
pub const DEFAULT_REACH_EPSILON_M: f64 = 50.0;

/// Two candidates closer than this are considered tied.
const TIE_EPS_M: f64 = 1e-6;

const NODE_CAPACITY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct SegmentId(pub u32);

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoadError {
    #[error("road network has no segments")]
    EmptyNetwork,
    #[error("segment {id}: {reason}")]
    InvalidSegment { id: SegmentId, reason: &'static str },
    #[error("duplicate segment id {0}")]
    DuplicateId(SegmentId),
    #[error("invalid reach epsilon {0}")]
    InvalidReach(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadSegment {
    id: SegmentId,
    polyline: Vec<GeoPoint>,
    name: Option<String>,
}

impl RoadSegment {
    pub fn new(
        id: SegmentId,
        polyline: Vec<GeoPoint>,
        name: Option<String>,
    ) -> Result<Self, RoadError> {
        if polyline.len() < 2 {
            return Err(RoadError::InvalidSegment { id, reason: "fewer than two vertices" });
        }
        if polyline.windows(2).any(|w| w[0] == w[1]) {
            return Err(RoadError::InvalidSegment { id, reason: "repeated consecutive vertex" });
        }
        Ok(RoadSegment { id, polyline, name })
    }

    pub fn id(&self) -> SegmentId {
        self.id
    }

    pub fn polyline(&self) -> &[GeoPoint] {
        &self.polyline
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn length(&self) -> f64 {
        self.polyline
            .windows(2)
            .map(|w| haversine_distance(w[0], w[1]))
            .sum()
    }

    pub fn bbox(&self) -> BBox {
        BBox::around(self.polyline.iter().copied())
    }

    /// Nearest point of this polyline to `p`, with its distance.
    fn nearest(&self, frame: &LocalFrame) -> (GeoPoint, f64) {
        let p = frame.origin;
        let mut best = (self.polyline[0], f64::INFINITY);
        for w in self.polyline.windows(2) {
            let q = project_on_edge(frame, w[0], w[1]);
            let d = haversine_distance(p, q);
            if d < best.1 {
                best = (q, d);
            }
        }
        best
    }
}

/// Projects the frame origin onto the edge `a -> b` in planar coordinates.
fn project_on_edge(frame: &LocalFrame, a: GeoPoint, b: GeoPoint) -> GeoPoint {
    let (ax, ay) = frame.to_local(a);
    let (bx, by) = frame.to_local(b);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { -(ax * dx + ay * dy) / len2 } else { 0.0 };
    if t <= 0.0 {
        a
    } else if t >= 1.0 {
        b
    } else {
        frame.from_local(ax + t * dx, ay + t * dy)
    }
}

/// Axis-aligned box in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl BBox {
    const EMPTY: BBox = BBox {
        min_lat: f64::INFINITY,
        min_lon: f64::INFINITY,
        max_lat: f64::NEG_INFINITY,
        max_lon: f64::NEG_INFINITY,
    };

    pub fn around(points: impl IntoIterator<Item = GeoPoint>) -> BBox {
        points.into_iter().fold(BBox::EMPTY, |b, p| BBox {
            min_lat: b.min_lat.min(p.lat()),
            min_lon: b.min_lon.min(p.lon()),
            max_lat: b.max_lat.max(p.lat()),
            max_lon: b.max_lon.max(p.lon()),
        })
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_lat: self.min_lat.min(other.min_lat),
            min_lon: self.min_lon.min(other.min_lon),
            max_lat: self.max_lat.max(other.max_lat),
            max_lon: self.max_lon.max(other.max_lon),
        }
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_lat <= other.max_lat
            && other.min_lat <= self.max_lat
            && self.min_lon <= other.max_lon
            && other.min_lon <= self.max_lon
    }

    fn center(&self) -> (f64, f64) {
        ((self.min_lat + self.max_lat) / 2.0, (self.min_lon + self.max_lon) / 2.0)
    }

    /// Lower bound on the great-circle distance from the frame origin to
    /// anything inside the box.
    fn distance_floor(&self, frame: &LocalFrame) -> f64 {
        let p = frame.origin;
        let lat = p.lat().clamp(self.min_lat, self.max_lat);
        let lon = p.lon().clamp(self.min_lon, self.max_lon);
        let dy = (lat - p.lat()) * frame.meters_per_deg_lat;
        let dx = (lon - p.lon()) * frame.meters_per_deg_lon;
        // The equirectangular metric drifts away from the origin; discount it
        // so the bound stays below the true distance.
        (libm::hypot(dx, dy) * 0.9 - 1.0).max(0.0)
    }
}

#[derive(Debug, Clone)]
struct Node {
    bbox: BBox,
    first: usize,
    len: usize,
}

/// Static sort-tile-recursive packed tree over segment boxes.
///
/// `levels[0]` holds one leaf per segment (in packed order); every higher
/// level groups up to [`NODE_CAPACITY`] consecutive nodes of the level below.
#[derive(Debug, Clone)]
pub struct BoxTree {
    levels: Vec<Vec<Node>>,
}

impl BoxTree {
    fn build(boxes: &[BBox]) -> BoxTree {
        let mut leaves: Vec<Node> = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| Node { bbox: *b, first: i, len: 1 })
            .collect();
        str_sort(&mut leaves);
        let mut levels = alloc::vec![leaves];
        while levels.last().is_some_and(|l| l.len() > 1) {
            let below = levels.last().unwrap();
            let parents: Vec<Node> = below
                .chunks(NODE_CAPACITY)
                .enumerate()
                .map(|(i, chunk)| Node {
                    bbox: chunk.iter().skip(1).fold(chunk[0].bbox, |b, n| b.union(&n.bbox)),
                    first: i * NODE_CAPACITY,
                    len: chunk.len(),
                })
                .collect();
            levels.push(parents);
        }
        BoxTree { levels }
    }

    fn top(&self) -> usize {
        self.levels.len() - 1
    }

    fn children(&self, level: usize, node: &Node) -> &[Node] {
        &self.levels[level - 1][node.first..node.first + node.len]
    }

    /// Indices of every segment whose box intersects `query`.
    pub fn query(&self, query: &BBox) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack: Vec<(usize, &Node)> =
            self.levels[self.top()].iter().map(|n| (self.top(), n)).collect();
        while let Some((level, node)) = stack.pop() {
            if !node.bbox.intersects(query) {
                continue;
            }
            if level == 0 {
                out.push(node.first);
            } else {
                stack.extend(self.children(level, node).iter().map(|c| (level - 1, c)));
            }
        }
        out.sort_unstable();
        out
    }
}

/// Orders nodes so that consecutive runs of [`NODE_CAPACITY`] are spatially
/// compact: vertical slices by longitude, then latitude within each slice.
fn str_sort(nodes: &mut [Node]) {
    let n = nodes.len();
    let leaves = n.div_ceil(NODE_CAPACITY);
    let slices = libm::ceil(libm::sqrt(leaves as f64)) as usize;
    let per_slice = (slices * NODE_CAPACITY).max(1);
    nodes.sort_by(|a, b| a.bbox.center().1.total_cmp(&b.bbox.center().1));
    for slice in nodes.chunks_mut(per_slice) {
        slice.sort_by(|a, b| a.bbox.center().0.total_cmp(&b.bbox.center().0));
    }
}

/// Where a query snapped to.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SnapResult {
    pub point: GeoPoint,
    pub segment_id: SegmentId,
    pub distance_from_query: f64,
}

#[derive(PartialEq)]
struct Pending {
    floor: f64,
    level: usize,
    index: usize,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on the floor distance.
        other.floor.total_cmp(&self.floor)
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An immutable, indexed set of roads.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    segments: Vec<RoadSegment>,
    index: BoxTree,
    reach_epsilon: f64,
}

impl RoadNetwork {
    pub fn new(segments: Vec<RoadSegment>, reach_epsilon: f64) -> Result<Self, RoadError> {
        if segments.is_empty() {
            return Err(RoadError::EmptyNetwork);
        }
        if !reach_epsilon.is_finite() || reach_epsilon < 0.0 {
            return Err(RoadError::InvalidReach(reach_epsilon));
        }
        let mut ids: Vec<SegmentId> = segments.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(RoadError::DuplicateId(w[0]));
        }
        let boxes: Vec<BBox> = segments.iter().map(RoadSegment::bbox).collect();
        Ok(RoadNetwork {
            index: BoxTree::build(&boxes),
            segments,
            reach_epsilon,
        })
    }

    pub fn segments(&self) -> &[RoadSegment] {
        &self.segments
    }

    pub fn segment(&self, id: SegmentId) -> Option<&RoadSegment> {
        self.segments.iter().find(|s| s.id == id)
    }

    pub fn reach_epsilon(&self) -> f64 {
        self.reach_epsilon
    }

    pub fn bbox(&self) -> BBox {
        self.index.levels[self.index.top()]
            .iter()
            .fold(BBox::EMPTY, |b, n| b.union(&n.bbox))
    }

    /// Segments whose bounding box intersects `query`.
    pub fn candidates(&self, query: &BBox) -> Vec<&RoadSegment> {
        self.index.query(query).into_iter().map(|i| &self.segments[i]).collect()
    }

    /// Globally nearest point on any road. Ties within a micrometer go to the
    /// lowest segment id.
    pub fn nearest_on_roads(&self, p: GeoPoint) -> SnapResult {
        let frame = LocalFrame::new(p);
        let mut heap = BinaryHeap::new();
        let top = self.index.top();
        for (i, n) in self.index.levels[top].iter().enumerate() {
            heap.push(Pending { floor: n.bbox.distance_floor(&frame), level: top, index: i });
        }
        let mut best: Option<SnapResult> = None;
        while let Some(Pending { floor, level, index }) = heap.pop() {
            if best.is_some_and(|b| floor > b.distance_from_query + TIE_EPS_M) {
                break;
            }
            let node = &self.index.levels[level][index];
            if level == 0 {
                let seg = &self.segments[node.first];
                let (point, d) = seg.nearest(&frame);
                let better = match best {
                    None => true,
                    Some(b) => {
                        d < b.distance_from_query - TIE_EPS_M
                            || (d <= b.distance_from_query + TIE_EPS_M && seg.id < b.segment_id)
                    }
                };
                if better {
                    best = Some(SnapResult { point, segment_id: seg.id, distance_from_query: d });
                }
            } else {
                for (offset, child) in self.index.children(level, node).iter().enumerate() {
                    heap.push(Pending {
                        floor: child.bbox.distance_floor(&frame),
                        level: level - 1,
                        index: node.first + offset,
                    });
                }
            }
        }
        best.expect("network is never empty")
    }

    pub fn is_reachable(&self, p: GeoPoint) -> bool {
        self.nearest_on_roads(p).distance_from_query <= self.reach_epsilon
    }

    /// Moves every active durian farther than the reach epsilon from all
    /// roads onto its nearest road point.
    pub fn snap_to_roads(&self, set: &DurianSet) -> DurianSet {
        let mut out = set.clone();
        for d in out.durians.iter_mut().filter(|d| d.is_active()) {
            let snap = self.nearest_on_roads(d.position);
            if snap.distance_from_query > self.reach_epsilon {
                d.position = snap.point;
                d.snapped = true;
            }
        }
        out
    }
}

/// Synthetic road layouts for tests and demos.
pub mod synth {
    use super::*;

    fn lattice(origin: GeoPoint, spacing: f64, i: usize, j: usize) -> GeoPoint {
        LocalFrame::new(origin).from_local(i as f64 * spacing, j as f64 * spacing)
    }

    /// `n` east-west and `n` north-south streets, each one polyline through
    /// all `n` intersections. Origin is the south-west corner.
    pub fn grid_streets(origin: GeoPoint, n: usize, spacing: f64) -> Vec<RoadSegment> {
        let mut out = Vec::with_capacity(2 * n);
        for j in 0..n {
            let line = (0..n).map(|i| lattice(origin, spacing, i, j)).collect();
            out.push(RoadSegment::new(SegmentId(j as u32), line, None).unwrap());
        }
        for i in 0..n {
            let line = (0..n).map(|j| lattice(origin, spacing, i, j)).collect();
            out.push(RoadSegment::new(SegmentId((n + i) as u32), line, None).unwrap());
        }
        out
    }

    /// Same lattice as [`grid_streets`] but one two-point segment per block
    /// edge, `2 n (n - 1)` segments in total.
    pub fn grid_edges(origin: GeoPoint, n: usize, spacing: f64) -> Vec<RoadSegment> {
        let mut out = Vec::new();
        let mut push = |a, b| {
            let id = SegmentId(out.len() as u32);
            out.push(RoadSegment::new(id, alloc::vec![a, b], None).unwrap());
        };
        for j in 0..n {
            for i in 0..n - 1 {
                push(lattice(origin, spacing, i, j), lattice(origin, spacing, i + 1, j));
            }
        }
        for i in 0..n {
            for j in 0..n - 1 {
                push(lattice(origin, spacing, i, j), lattice(origin, spacing, i, j + 1));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::destination_point;
    use crate::spawn::{Durian, DurianId, DurianState};
    use crate::AnnulusSpec;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn origin() -> GeoPoint {
        GeoPoint::new(36.07, 120.38).unwrap()
    }

    fn seg(id: u32, pts: &[GeoPoint]) -> RoadSegment {
        RoadSegment::new(SegmentId(id), pts.to_vec(), None).unwrap()
    }

    #[test]
    fn segment_validation() {
        let a = origin();
        assert!(RoadSegment::new(SegmentId(0), vec![a], None).is_err());
        assert!(RoadSegment::new(SegmentId(0), vec![a, a], None).is_err());
        assert!(matches!(RoadNetwork::new(vec![], 50.0), Err(RoadError::EmptyNetwork)));
        let b = destination_point(a, 90.0, 10.0);
        assert!(matches!(
            RoadNetwork::new(vec![seg(1, &[a, b]), seg(1, &[b, a])], 50.0),
            Err(RoadError::DuplicateId(SegmentId(1)))
        ));
    }

    #[test]
    fn vertex_query_returns_vertex() {
        let a = origin();
        let b = destination_point(a, 90.0, 100.0);
        let c = destination_point(b, 0.0, 100.0);
        let net = RoadNetwork::new(vec![seg(0, &[a, b, c])], 50.0).unwrap();
        let snap = net.nearest_on_roads(b);
        assert_eq!(snap.point, b);
        assert!(snap.distance_from_query < 0.1);
    }

    #[test]
    fn interior_projection() {
        let a = origin();
        let b = destination_point(a, 90.0, 200.0);
        let net = RoadNetwork::new(vec![seg(0, &[a, b])], 50.0).unwrap();
        let mid = destination_point(a, 90.0, 100.0);
        let q = destination_point(mid, 0.0, 40.0);
        let snap = net.nearest_on_roads(q);
        assert!((snap.distance_from_query - 40.0).abs() < 0.1);
        assert!((snap.point.lat() - mid.lat()).abs() < 1e-6);
    }

    #[test]
    fn equidistant_parallel_roads_prefer_lower_id() {
        let frame = LocalFrame::new(origin());
        let south = [frame.from_local(-100.0, -30.0), frame.from_local(100.0, -30.0)];
        let north = [frame.from_local(-100.0, 30.0), frame.from_local(100.0, 30.0)];
        for (lo, hi) in [(&south, &north), (&north, &south)] {
            let net = RoadNetwork::new(vec![seg(7, hi), seg(3, lo)], 50.0).unwrap();
            let snap = net.nearest_on_roads(origin());
            assert_eq!(snap.segment_id, SegmentId(3));
        }
    }

    #[test]
    fn index_has_no_false_negatives() {
        let segments = synth::grid_edges(origin(), 20, 50.0);
        let net = RoadNetwork::new(segments, 50.0).unwrap();
        let bb = net.bbox();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let lat = rng.gen_range(bb.min_lat - 0.001..bb.max_lat + 0.001);
            let lon = rng.gen_range(bb.min_lon - 0.001..bb.max_lon + 0.001);
            let h = rng.gen_range(0.0..0.003);
            let w = rng.gen_range(0.0..0.003);
            let q = BBox { min_lat: lat, min_lon: lon, max_lat: lat + h, max_lon: lon + w };
            let mut got: Vec<SegmentId> = net.candidates(&q).iter().map(|s| s.id()).collect();
            got.sort();
            let want: Vec<SegmentId> = net
                .segments()
                .iter()
                .filter(|s| s.bbox().intersects(&q))
                .map(|s| s.id())
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn nearest_matches_linear_scan() {
        let net = RoadNetwork::new(synth::grid_edges(origin(), 15, 70.0), 50.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let frame = LocalFrame::new(origin());
        for _ in 0..300 {
            let q = frame.from_local(rng.gen_range(-300.0..1300.0), rng.gen_range(-300.0..1300.0));
            let snap = net.nearest_on_roads(q);
            let scan = net
                .segments()
                .iter()
                .map(|s| s.nearest(&LocalFrame::new(q)).1)
                .fold(f64::INFINITY, f64::min);
            assert!((snap.distance_from_query - scan).abs() < 1e-6);
        }
    }

    fn durian(id: u32, position: GeoPoint, state: DurianState) -> Durian {
        Durian { id: DurianId(id), position, state, snapped: false }
    }

    #[test]
    fn snapping_moves_only_unreachable_active_durians() {
        let frame = LocalFrame::new(origin());
        let road = seg(0, &[frame.from_local(-500.0, 0.0), frame.from_local(500.0, 0.0)]);
        let net = RoadNetwork::new(vec![road], 50.0).unwrap();
        let set = DurianSet {
            durians: vec![
                durian(1, frame.from_local(0.0, 20.0), DurianState::Active),
                durian(2, frame.from_local(10.0, 120.0), DurianState::Active),
                durian(3, frame.from_local(20.0, 300.0), DurianState::Captured),
                durian(4, frame.from_local(30.0, -80.0), DurianState::Failed),
            ],
            spawn_center: origin(),
            spawn_spec: AnnulusSpec::new(origin(), 30.0, 200.0).unwrap(),
            d_min: 0.0,
        };
        let out = net.snap_to_roads(&set);
        assert_eq!(out.durians[0], set.durians[0]);
        assert!(out.durians[1].snapped);
        assert!(net.nearest_on_roads(out.durians[1].position).distance_from_query < 1e-6);
        assert_eq!(out.durians[2], set.durians[2]);
        assert_eq!(out.durians[3], set.durians[3]);
        assert_eq!(net.snap_to_roads(&out), out);
    }
}
