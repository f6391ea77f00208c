//! Road data as a GeoJSON `FeatureCollection` of `LineString` features.
//!
//! Coordinates are `[lon, lat]` pairs in WGS84 degrees. Feature `i` becomes
//! segment id `i`; an optional `properties.name` is kept.

use std::path::Path;

use durian_core::roads::{RoadError, RoadNetwork, RoadSegment, SegmentId};
use durian_core::GeoPoint;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RoadFileError {
    #[error("road data: {0}")]
    Json(#[from] serde_json::Error),
    #[error("road data, feature {feature}: {message}")]
    Feature { feature: usize, message: String },
    #[error(transparent)]
    Network(#[from] RoadError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct Collection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Value>,
}

fn feature_error(feature: usize, message: impl Into<String>) -> RoadFileError {
    RoadFileError::Feature { feature, message: message.into() }
}

fn parse_feature(index: usize, feature: &Value) -> Result<RoadSegment, RoadFileError> {
    let geometry = feature
        .get("geometry")
        .ok_or_else(|| feature_error(index, "missing geometry"))?;
    match geometry.get("type").and_then(Value::as_str) {
        Some("LineString") => {}
        other => {
            return Err(feature_error(index, format!("geometry type {other:?} is not LineString")))
        }
    }
    let coords = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| feature_error(index, "coordinates must be an array"))?;
    let mut polyline = Vec::with_capacity(coords.len());
    for (k, c) in coords.iter().enumerate() {
        let pair = c
            .as_array()
            .filter(|a| a.len() >= 2)
            .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
            .ok_or_else(|| feature_error(index, format!("coordinate {k} is not [lon, lat]")))?;
        let (lon, lat) = pair;
        let p = GeoPoint::new(lat, lon)
            .map_err(|e| feature_error(index, format!("coordinate {k}: {e}")))?;
        polyline.push(p);
    }
    let name = feature
        .get("properties")
        .and_then(|p| p.get("name"))
        .and_then(Value::as_str)
        .map(str::to_owned);
    RoadSegment::new(SegmentId(index as u32), polyline, name)
        .map_err(|e| feature_error(index, e.to_string()))
}

pub fn parse_roads(text: &str, reach_epsilon: f64) -> Result<RoadNetwork, RoadFileError> {
    let doc: Collection = serde_json::from_str(text)?;
    if doc.kind != "FeatureCollection" {
        return Err(feature_error(0, format!("top-level type {:?} is not FeatureCollection", doc.kind)));
    }
    let segments = doc
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| parse_feature(i, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RoadNetwork::new(segments, reach_epsilon)?)
}

pub fn load_roads(path: impl AsRef<Path>, reach_epsilon: f64) -> Result<RoadNetwork, RoadFileError> {
    parse_roads(&std::fs::read_to_string(path)?, reach_epsilon)
}

#[derive(Serialize)]
struct OutFeature<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    geometry: OutGeometry,
    properties: OutProps<'a>,
}

#[derive(Serialize)]
struct OutGeometry {
    #[serde(rename = "type")]
    kind: &'static str,
    coordinates: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct OutProps<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
}

/// Writes segments back out in the same format, ordered by position.
pub fn to_geojson(segments: &[RoadSegment]) -> String {
    let features: Vec<OutFeature> = segments
        .iter()
        .map(|s| OutFeature {
            kind: "Feature",
            geometry: OutGeometry {
                kind: "LineString",
                coordinates: s.polyline().iter().map(|p| [p.lon(), p.lat()]).collect(),
            },
            properties: OutProps { name: s.name() },
        })
        .collect();
    serde_json::json!({ "type": "FeatureCollection", "features": features }).to_string()
}
