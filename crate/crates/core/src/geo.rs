//! Spherical-earth geodesy at game scale.
//!
//! Angles are degrees at every public boundary and radians internally.
//! Distances are meters on a sphere of radius [`EARTH_RADIUS_M`].

use core::f64::consts::PI;
use core::fmt;

use rand::Rng;
use thiserror::Error;

/// Mean Earth radius.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Largest radius for which the planar approximations in this module hold.
pub const MAX_PLANAR_RADIUS_M: f64 = 5_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("annulus radii must satisfy 0 < r_min < r_max <= {MAX_PLANAR_RADIUS_M}, got [{0}, {1}]")]
    Annulus(f64, f64),
}

/// A WGS84 latitude/longitude pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "RawPoint")
)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

#[cfg(feature = "serde")]
impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    #[inline]
    pub fn lat(&self) -> f64 {
        self.lat
    }

    #[inline]
    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Builds a point from values already known to be in range, clamping
    /// latitude and wrapping longitude to absorb rounding.
    pub(crate) fn normalized(lat: f64, lon: f64) -> Self {
        GeoPoint {
            lat: lat.clamp(-90.0, 90.0),
            lon: wrap_longitude(lon),
        }
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.7}, {:.7})", self.lat, self.lon)
    }
}

fn wrap_longitude(lon: f64) -> f64 {
    if (-180.0..=180.0).contains(&lon) {
        lon
    } else {
        let wrapped = rem_euclid(lon + 180.0, 360.0) - 180.0;
        if wrapped == -180.0 && lon > 0.0 {
            180.0
        } else {
            wrapped
        }
    }
}

fn rem_euclid(a: f64, b: f64) -> f64 {
    let r = libm::fmod(a, b);
    if r < 0.0 {
        r + b
    } else {
        r
    }
}

#[inline]
fn to_rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

#[inline]
fn to_deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}

/// Great-circle distance in meters.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (to_rad(a.lat), to_rad(b.lat));
    let dlat = lat2 - lat1;
    let dlon = to_rad(b.lon - a.lon);
    let s_lat = libm::sin(dlat / 2.0);
    let s_lon = libm::sin(dlon / 2.0);
    let h = s_lat * s_lat + libm::cos(lat1) * libm::cos(lat2) * s_lon * s_lon;
    2.0 * EARTH_RADIUS_M * libm::asin(libm::sqrt(h.clamp(0.0, 1.0)))
}

/// Point reached by travelling `distance` meters from `origin` along the
/// great circle with initial `bearing` (degrees clockwise from north).
pub fn destination_point(origin: GeoPoint, bearing: f64, distance: f64) -> GeoPoint {
    if distance == 0.0 {
        return origin;
    }
    let delta = distance / EARTH_RADIUS_M;
    let theta = to_rad(bearing);
    let lat1 = to_rad(origin.lat);
    let lon1 = to_rad(origin.lon);

    let sin_lat2 = libm::sin(lat1) * libm::cos(delta)
        + libm::cos(lat1) * libm::sin(delta) * libm::cos(theta);
    let lat2 = libm::asin(sin_lat2.clamp(-1.0, 1.0));
    let lon2 = lon1
        + libm::atan2(
            libm::sin(theta) * libm::sin(delta) * libm::cos(lat1),
            libm::cos(delta) - libm::sin(lat1) * sin_lat2,
        );
    GeoPoint::normalized(to_deg(lat2), to_deg(lon2))
}

/// Equirectangular tangent frame around `origin`.
///
/// `x` grows east and `y` grows north, both in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: GeoPoint,
    pub meters_per_deg_lat: f64,
    pub meters_per_deg_lon: f64,
}

impl LocalFrame {
    pub fn new(origin: GeoPoint) -> Self {
        let meters_per_deg_lat = EARTH_RADIUS_M * PI / 180.0;
        LocalFrame {
            origin,
            meters_per_deg_lat,
            meters_per_deg_lon: meters_per_deg_lat * libm::cos(to_rad(origin.lat)),
        }
    }

    pub fn to_local(&self, p: GeoPoint) -> (f64, f64) {
        let dlon = wrap_longitude(p.lon - self.origin.lon);
        (
            dlon * self.meters_per_deg_lon,
            (p.lat - self.origin.lat) * self.meters_per_deg_lat,
        )
    }

    pub fn from_local(&self, x: f64, y: f64) -> GeoPoint {
        GeoPoint::normalized(
            self.origin.lat + y / self.meters_per_deg_lat,
            self.origin.lon + x / self.meters_per_deg_lon,
        )
    }
}

/// Ring of admissible spawn positions around a center.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnnulusSpec {
    pub center: GeoPoint,
    r_min: f64,
    r_max: f64,
}

impl AnnulusSpec {
    pub fn new(center: GeoPoint, r_min: f64, r_max: f64) -> Result<Self, GeoError> {
        let ok = r_min.is_finite()
            && r_max.is_finite()
            && r_min > 0.0
            && r_min < r_max
            && r_max <= MAX_PLANAR_RADIUS_M;
        if !ok {
            return Err(GeoError::Annulus(r_min, r_max));
        }
        Ok(AnnulusSpec { center, r_min, r_max })
    }

    #[inline]
    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    #[inline]
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Same radii around a different center.
    pub fn recentered(&self, center: GeoPoint) -> Self {
        AnnulusSpec { center, ..*self }
    }

    pub fn area(&self) -> f64 {
        PI * (self.r_max * self.r_max - self.r_min * self.r_min)
    }
}

/// How the sampled radius is distributed between `r_min` and `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RadialLaw {
    /// Uniform density per unit area.
    #[default]
    AreaUniform,
    /// Uniform in radius. Over-samples the inner part of the ring; kept as a
    /// negative control for the uniformity statistics.
    Naive,
}

impl RadialLaw {
    pub fn radius<R: Rng + ?Sized>(self, r_min: f64, r_max: f64, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let r = match self {
            RadialLaw::AreaUniform => {
                libm::sqrt(u * (r_max * r_max - r_min * r_min) + r_min * r_min)
            }
            RadialLaw::Naive => r_min + u * (r_max - r_min),
        };
        // Keep float round-off in destination_point from leaking out of range.
        r.clamp(r_min * (1.0 + 1e-12), r_max * (1.0 - 1e-12))
    }
}

/// Draws a point uniformly per unit area from the annulus.
pub fn sample_annulus<R: Rng + ?Sized>(spec: &AnnulusSpec, rng: &mut R) -> GeoPoint {
    sample_annulus_with(spec, RadialLaw::AreaUniform, rng)
}

pub fn sample_annulus_with<R: Rng + ?Sized>(
    spec: &AnnulusSpec,
    law: RadialLaw,
    rng: &mut R,
) -> GeoPoint {
    let r = law.radius(spec.r_min, spec.r_max, rng);
    let bearing = rng.gen::<f64>() * 360.0;
    destination_point(spec.center, bearing, r)
}

/// Bearing from `from` to `to`, degrees in `[0, 360)`.
pub fn initial_bearing(from: GeoPoint, to: GeoPoint) -> f64 {
    let (lat1, lat2) = (to_rad(from.lat), to_rad(to.lat));
    let dlon = to_rad(to.lon - from.lon);
    let y = libm::sin(dlon) * libm::cos(lat2);
    let x = libm::cos(lat1) * libm::sin(lat2) - libm::sin(lat1) * libm::cos(lat2) * libm::cos(dlon);
    rem_euclid(to_deg(libm::atan2(y, x)), 360.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn rejects_out_of_range_coordinates() {
        assert!(matches!(GeoPoint::new(90.5, 0.0), Err(GeoError::Latitude(_))));
        assert!(matches!(GeoPoint::new(0.0, -181.0), Err(GeoError::Longitude(_))));
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn haversine_reference_values() {
        let x = pt(36.07, 120.38);
        assert_eq!(haversine_distance(x, x), 0.0);

        // One degree of arc: 2 pi R / 360.
        let one_deg = 2.0 * PI * EARTH_RADIUS_M / 360.0;
        assert!((one_deg - 111_195.0).abs() < 5.0);
        assert!((haversine_distance(pt(0.0, 0.0), pt(0.0, 1.0)) - 111_195.0).abs() < 5.0);

        // Quarter meridian: pi R / 2.
        let quarter = PI * EARTH_RADIUS_M / 2.0;
        assert!((quarter - 10_007_543.0).abs() < 10.0);
        assert!((haversine_distance(pt(0.0, 0.0), pt(90.0, 0.0)) - 10_007_543.0).abs() < 10.0);
    }

    #[test]
    fn destination_reference_values() {
        let x = pt(46.07, 11.12);
        assert_eq!(destination_point(x, 123.0, 0.0), x);

        let east = destination_point(pt(0.0, 0.0), 90.0, 111_195.0);
        assert!(east.lat().abs() < 1e-4);
        assert!((east.lon() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn destination_wraps_antimeridian() {
        let p = destination_point(pt(0.0, 179.9995), 90.0, 200.0);
        assert!(p.lon() < -179.99);
        assert!((haversine_distance(pt(0.0, 179.9995), p) - 200.0).abs() < 1e-6);
    }

    #[test]
    fn local_frame_scaling() {
        let frame = LocalFrame::new(pt(60.0, 10.0));
        let expected = frame.meters_per_deg_lat * libm::cos(to_rad(60.0));
        assert!(((frame.meters_per_deg_lon - expected) / expected).abs() < 1e-9);
        assert_eq!(frame.to_local(frame.origin), (0.0, 0.0));
    }

    #[test]
    fn annulus_validation() {
        let c = pt(0.0, 0.0);
        assert!(AnnulusSpec::new(c, 30.0, 200.0).is_ok());
        assert!(AnnulusSpec::new(c, 0.0, 200.0).is_err());
        assert!(AnnulusSpec::new(c, 200.0, 200.0).is_err());
        assert!(AnnulusSpec::new(c, 30.0, 5_001.0).is_err());
    }

    #[test]
    fn annulus_containment_exhaustive() {
        let spec = AnnulusSpec::new(pt(36.07, 120.38), 30.0, 200.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let d = haversine_distance(spec.center, sample_annulus(&spec, &mut rng));
            assert!((30.0..=200.0).contains(&d), "distance {d}");
        }
    }

    #[test]
    fn sampling_is_deterministic_for_a_seed() {
        let spec = AnnulusSpec::new(pt(-33.9, 151.2), 30.0, 200.0).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| sample_annulus(&spec, &mut rng)).collect::<alloc::vec::Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    fn point() -> impl Strategy<Value = GeoPoint> {
        (-70.0..70.0f64, -179.0..179.0f64).prop_map(|(lat, lon)| pt(lat, lon))
    }

    fn nearby(origin: GeoPoint, bearing: f64, dist: f64) -> GeoPoint {
        destination_point(origin, bearing, dist)
    }

    proptest! {
        #[test]
        fn distance_symmetry_and_triangle(a in point(), b in point(), c in point()) {
            let ab = haversine_distance(a, b);
            let ba = haversine_distance(b, a);
            prop_assert!((ab - ba).abs() < 1e-6);
            prop_assert!(ab >= 0.0);
            let ac = haversine_distance(a, c);
            let cb = haversine_distance(c, b);
            prop_assert!(ab <= ac + cb + 1e-6);
        }

        #[test]
        fn destination_round_trip(o in point(), bearing in 0.0..360.0f64, dist in 0.0..5_000.0f64) {
            let d = haversine_distance(o, destination_point(o, bearing, dist));
            prop_assert!((d - dist).abs() <= dist * 1e-3 + 1e-9);
        }

        #[test]
        fn local_round_trip(o in point(), bearing in 0.0..360.0f64, dist in 0.0..2_000.0f64) {
            let frame = LocalFrame::new(o);
            let p = nearby(o, bearing, dist);
            let (x, y) = frame.to_local(p);
            let back = frame.from_local(x, y);
            prop_assert!((back.lat() - p.lat()).abs() < 1e-7);
            prop_assert!((back.lon() - p.lon()).abs() < 1e-7);
        }

        #[test]
        fn planar_distance_agrees(
            o in point(),
            b1 in 0.0..360.0f64, d1 in 0.0..2_000.0f64,
            b2 in 0.0..360.0f64, d2 in 0.0..2_000.0f64,
        ) {
            let frame = LocalFrame::new(o);
            let (p, q) = (nearby(o, b1, d1), nearby(o, b2, d2));
            let (px, py) = frame.to_local(p);
            let (qx, qy) = frame.to_local(q);
            let planar = libm::hypot(px - qx, py - qy);
            let sphere = haversine_distance(p, q);
            prop_assume!(sphere > 1.0);
            prop_assert!(((planar - sphere) / sphere).abs() <= 5e-3, "{} vs {}", planar, sphere);
        }

        #[test]
        fn bearing_inverts_destination(o in point(), bearing in 0.0..360.0f64, dist in 10.0..5_000.0f64) {
            let b = initial_bearing(o, destination_point(o, bearing, dist));
            let diff = (b - bearing + 540.0).rem_euclid(360.0) - 180.0;
            prop_assert!(diff.abs() < 1e-6);
        }
    }
}
