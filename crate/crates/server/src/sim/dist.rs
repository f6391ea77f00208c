//! Spawn-distribution experiment: many rounds per durian count, pooled
//! positions, and uniformity statistics over angle and equal-area rings.

use std::fs;
use std::io::Write;
use std::path::Path;

use durian_core::geo::haversine_distance;
use durian_core::spawn::{spawn_round, SpawnParams};
use durian_core::{AnnulusSpec, GeoError, GeoPoint, RadialLaw, SpawnError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stats::{band_counts, chi_square_uniform, sector_counts};

pub const SECTORS: usize = 8;
pub const BANDS: usize = 4;
pub const ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Area,
    Naive,
}

impl std::str::FromStr for Sampler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "area" => Ok(Sampler::Area),
            "naive" => Ok(Sampler::Naive),
            _ => Err(format!("unknown sampler {s:?}, expected area or naive")),
        }
    }
}

impl Sampler {
    fn law(self) -> RadialLaw {
        match self {
            Sampler::Area => RadialLaw::AreaUniform,
            Sampler::Naive => RadialLaw::Naive,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DistParams {
    pub center: GeoPoint,
    pub counts: Vec<usize>,
    pub rounds: usize,
    pub seed: u64,
    pub sampler: Sampler,
    pub r_min: f64,
    pub r_max: f64,
    pub d_min: f64,
    pub max_attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountStats {
    pub count: usize,
    pub rounds: usize,
    pub positions: usize,
    pub sector_counts: Vec<u64>,
    pub band_counts: Vec<u64>,
    pub angular_p: f64,
    pub radial_p: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub in_range: usize,
    /// Smallest distance between two durians of the same round.
    pub min_separation: f64,
}

impl CountStats {
    pub fn uniform(&self) -> bool {
        self.angular_p > ALPHA && self.radial_p > ALPHA
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistReport {
    pub center: GeoPoint,
    pub sampler: Sampler,
    pub seed: u64,
    pub rounds: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub d_min: f64,
    pub alpha: f64,
    pub per_count: Vec<CountStats>,
}

pub struct DistRun {
    /// Every spawned position with the round size it came from.
    pub positions: Vec<(GeoPoint, usize)>,
    pub report: DistReport,
}

#[derive(Debug, thiserror::Error)]
pub enum DistError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Spawn(#[from] SpawnError),
}

pub fn run(params: &DistParams) -> Result<DistRun, DistError> {
    let spec = AnnulusSpec::new(params.center, params.r_min, params.r_max)?;
    let mut positions = Vec::new();
    let mut per_count = Vec::new();
    for &count in &params.counts {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(count as u64);
        let sp = SpawnParams {
            count,
            d_min: params.d_min,
            max_attempts: params.max_attempts,
            law: params.sampler.law(),
        };
        let mut pts = Vec::with_capacity(count * params.rounds);
        let mut min_sep = f64::INFINITY;
        for _ in 0..params.rounds {
            let set = spawn_round(params.center, &spec, &sp, &mut rng)?;
            if let Some(s) = set.min_separation() {
                min_sep = min_sep.min(s);
            }
            pts.extend(set.durians.iter().map(|d| d.position));
        }
        let radii: Vec<f64> = pts.iter().map(|p| haversine_distance(params.center, *p)).collect();
        // Tolerance for the haversine round trip of a point placed at r_min or r_max.
        let tol = 1e-6;
        let in_range = radii
            .iter()
            .filter(|&&r| r >= params.r_min - tol && r <= params.r_max + tol)
            .count();
        let sectors = sector_counts(params.center, &pts, SECTORS);
        let bands = band_counts(&spec, &pts, BANDS);
        per_count.push(CountStats {
            count,
            rounds: params.rounds,
            positions: pts.len(),
            angular_p: chi_square_uniform(&sectors),
            radial_p: chi_square_uniform(&bands),
            sector_counts: sectors,
            band_counts: bands,
            min_radius: radii.iter().copied().fold(f64::INFINITY, f64::min),
            max_radius: radii.iter().copied().fold(0.0, f64::max),
            in_range,
            min_separation: min_sep,
        });
        positions.extend(pts.into_iter().map(|p| (p, count)));
    }
    Ok(DistRun {
        positions,
        report: DistReport {
            center: params.center,
            sampler: params.sampler,
            seed: params.seed,
            rounds: params.rounds,
            r_min: params.r_min,
            r_max: params.r_max,
            d_min: params.d_min,
            alpha: ALPHA,
            per_count,
        },
    })
}

/// Scatter CSV: a `center` row first, then one row per durian.
pub fn scatter_csv(run: &DistRun) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lat", "lon", "count_label"]).unwrap();
    let c = run.report.center;
    w.write_record([format!("{:.9}", c.lat()), format!("{:.9}", c.lon()), "center".into()])
        .unwrap();
    for (p, n) in &run.positions {
        w.write_record([format!("{:.9}", p.lat()), format!("{:.9}", p.lon()), n.to_string()])
            .unwrap();
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii")
}

/// Writes `scatter.csv` and `stats.json` into `dir`.
pub fn write(run: &DistRun, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("scatter.csv"), scatter_csv(run))?;
    let mut f = fs::File::create(dir.join("stats.json"))?;
    serde_json::to_writer_pretty(&mut f, &run.report)?;
    f.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(sampler: Sampler) -> DistParams {
        DistParams {
            center: crate::sim::default_center(),
            counts: vec![6, 12],
            rounds: 50,
            seed: 42,
            sampler,
            r_min: 30.0,
            r_max: 200.0,
            d_min: 25.0,
            max_attempts: 1000,
        }
    }

    #[test]
    fn reproducible_and_in_range() {
        let a = run(&params(Sampler::Area)).unwrap();
        let b = run(&params(Sampler::Area)).unwrap();
        assert_eq!(scatter_csv(&a), scatter_csv(&b));
        for s in &a.report.per_count {
            assert_eq!(s.in_range, s.positions);
            assert_eq!(s.positions, s.count * 50);
            assert!(s.min_separation >= 25.0);
        }
        let csv = scatter_csv(&a);
        assert!(csv.lines().nth(1).unwrap().ends_with(",center"));
        assert_eq!(csv.lines().count(), 2 + 50 * 18);
    }
}
