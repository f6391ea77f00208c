//! Landmark fixtures: a JSON object mapping landmark name to
//! `{"confidence": c, "x": .., "y": ..}` with the position optional.

use std::collections::BTreeMap;

use durian_core::mask::{LandmarkError, UnknownLandmark};
use durian_core::{Landmark, LandmarkSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LandmarkFileError {
    #[error("landmark fixture: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Name(#[from] UnknownLandmark),
    #[error(transparent)]
    Value(#[from] LandmarkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

pub type LandmarkDoc = BTreeMap<String, EntryDoc>;

pub fn from_doc(doc: &LandmarkDoc) -> Result<LandmarkSet, LandmarkFileError> {
    let mut set = LandmarkSet::new();
    for (name, e) in doc {
        let landmark: Landmark = name.parse()?;
        let position = e.x.zip(e.y);
        set.insert(landmark, e.confidence, position)?;
    }
    Ok(set)
}

pub fn to_doc(set: &LandmarkSet) -> LandmarkDoc {
    set.iter()
        .map(|(l, e)| {
            let (x, y) = e.position.unzip();
            (l.name().to_owned(), EntryDoc { confidence: e.confidence, x, y })
        })
        .collect()
}

pub fn parse_landmarks(text: &str) -> Result<LandmarkSet, LandmarkFileError> {
    from_doc(&serde_json::from_str(text)?)
}

/// Bundled fixture of a face wearing a mask.
pub fn masked_fixture() -> LandmarkSet {
    parse_landmarks(include_str!("../../data/fixtures/masked.json")).expect("bundled fixture")
}

/// Bundled fixture of a fully visible face.
pub fn unmasked_fixture() -> LandmarkSet {
    parse_landmarks(include_str!("../../data/fixtures/unmasked.json")).expect("bundled fixture")
}
