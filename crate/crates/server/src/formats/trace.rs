//! GPS traces as CSV rows `t_unix_s,lat,lon`, optionally with that header.

use std::io::{Read, Write};

use durian_core::session::Timestamp;
use durian_core::GeoPoint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceParseError {
    #[error("trace row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("trace: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: Timestamp,
    pub position: GeoPoint,
}

pub fn read_trace(reader: impl Read) -> Result<Vec<TracePoint>, TraceParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out: Vec<TracePoint> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if i == 0 && rec.get(0) == Some("t_unix_s") {
            continue;
        }
        let bad = |message: String| TraceParseError::Row { row, message };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", rec.len())));
        }
        let num = |k: usize| {
            rec[k]
                .parse::<f64>()
                .map_err(|e| bad(format!("field {}: {e}", k + 1)))
        };
        let (t, lat, lon) = (num(0)?, num(1)?, num(2)?);
        let position = GeoPoint::new(lat, lon).map_err(|e| bad(e.to_string()))?;
        if let Some(prev) = out.last() {
            if t <= prev.t.0 {
                return Err(bad(format!("time {t} does not increase")));
            }
        }
        out.push(TracePoint { t: Timestamp(t), position });
    }
    Ok(out)
}

pub fn write_trace(mut w: impl Write, points: &[TracePoint]) -> std::io::Result<()> {
    writeln!(w, "t_unix_s,lat,lon")?;
    for p in points {
        writeln!(w, "{},{:.8},{:.8}", p.t.0, p.position.lat(), p.position.lon())?;
    }
    Ok(())
}
