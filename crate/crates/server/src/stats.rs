//! Goodness-of-fit helpers for spawn positions around a center.

use durian_core::geo::{haversine_distance, initial_bearing};
use durian_core::{AnnulusSpec, GeoPoint};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail p-value of Pearson's chi-square test against equal expected
/// counts in every bin.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let k = counts.len();
    assert!(k >= 2, "need at least two bins");
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 1.0;
    }
    let expected = n as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("k >= 2");
    1.0 - dist.cdf(stat)
}

/// Counts points per equal-angle sector, sector 0 starting due north.
pub fn sector_counts(center: GeoPoint, points: &[GeoPoint], sectors: usize) -> Vec<u64> {
    let mut counts = vec![0; sectors];
    let width = 360.0 / sectors as f64;
    for &p in points {
        let k = (initial_bearing(center, p) / width) as usize;
        counts[k.min(sectors - 1)] += 1;
    }
    counts
}

/// Counts points per ring of the annulus, rings chosen to have equal area.
pub fn band_counts(spec: &AnnulusSpec, points: &[GeoPoint], bands: usize) -> Vec<u64> {
    let (a, b) = (spec.r_min() * spec.r_min(), spec.r_max() * spec.r_max());
    let mut counts = vec![0; bands];
    for &p in points {
        let r = haversine_distance(spec.center, p);
        let frac = ((r * r - a) / (b - a)).clamp(0.0, 1.0);
        let k = (frac * bands as f64) as usize;
        counts[k.min(bands - 1)] += 1;
    }
    counts
}
