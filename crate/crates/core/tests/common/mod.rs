#![allow(dead_code)]

use durian_core::geo::{GeoPoint, EARTH_RADIUS_M};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail p-value of Pearson's statistic against equal expected counts.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// Bearing of `p` seen from `c` in degrees, computed on a local tangent
/// plane. Independent of the library's own bearing code.
pub fn bearing_deg(c: GeoPoint, p: GeoPoint) -> f64 {
    let dy = (p.lat() - c.lat()).to_radians();
    let dx = (p.lon() - c.lon()).to_radians() * c.lat().to_radians().cos();
    dx.atan2(dy).to_degrees().rem_euclid(360.0)
}

/// Great-circle distance via the spherical law of cosines, a second route
/// to the haversine value.
pub fn cosine_law_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat().to_radians(), b.lat().to_radians());
    let dl = (b.lon() - a.lon()).to_radians();
    let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    EARTH_RADIUS_M * c.clamp(-1.0, 1.0).acos()
}

pub fn sector_counts(center: GeoPoint, pts: &[GeoPoint], sectors: usize) -> Vec<u64> {
    let mut counts = vec![0u64; sectors];
    for p in pts {
        let k = (bearing_deg(center, *p) / (360.0 / sectors as f64)) as usize;
        counts[k.min(sectors - 1)] += 1;
    }
    counts
}

/// Counts per equal-area ring between `r_min` and `r_max`.
pub fn band_counts(radii: &[f64], r_min: f64, r_max: f64, bands: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bands];
    let (a, b) = (r_min * r_min, r_max * r_max);
    for r in radii {
        let frac = (r * r - a) / (b - a);
        let k = (frac * bands as f64) as usize;
        counts[k.min(bands - 1)] += 1;
    }
    counts
}
