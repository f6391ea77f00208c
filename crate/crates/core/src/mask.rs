//! Mask detection from facial-landmark confidences.
//!
//! A face detector reports a confidence per landmark. A mask hides the lower
//! face, so the nose-bottom, mouth, lip and chin landmarks lose confidence
//! while the eyes stay clearly visible. The rule compares the mean
//! confidence of the two regions against fixed thresholds.

use alloc::collections::BTreeMap;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// The 27 landmark names understood by the gate. Names follow the
/// `UPPER_SNAKE_CASE` convention used by common face-detection APIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Landmark {
    LeftEye,
    RightEye,
    LeftEyeLeftCorner,
    LeftEyeRightCorner,
    RightEyeLeftCorner,
    RightEyeRightCorner,
    LeftOfLeftEyebrow,
    RightOfLeftEyebrow,
    LeftOfRightEyebrow,
    RightOfRightEyebrow,
    LeftEyebrowUpperMidpoint,
    RightEyebrowUpperMidpoint,
    MidpointBetweenEyes,
    ForeheadGlabella,
    NoseTip,
    NoseBottomLeft,
    NoseBottomRight,
    MouthLeft,
    MouthRight,
    MouthCenter,
    UpperLip,
    LowerLip,
    ChinGnathion,
    LeftCheekCenter,
    RightCheekCenter,
    LeftEarTragion,
    RightEarTragion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Region {
    Eyes,
    Brows,
    Nose,
    /// Landmarks a mask covers.
    Occludable,
    Cheeks,
    Ears,
}

impl Landmark {
    pub const ALL: [Landmark; 27] = [
        Landmark::LeftEye,
        Landmark::RightEye,
        Landmark::LeftEyeLeftCorner,
        Landmark::LeftEyeRightCorner,
        Landmark::RightEyeLeftCorner,
        Landmark::RightEyeRightCorner,
        Landmark::LeftOfLeftEyebrow,
        Landmark::RightOfLeftEyebrow,
        Landmark::LeftOfRightEyebrow,
        Landmark::RightOfRightEyebrow,
        Landmark::LeftEyebrowUpperMidpoint,
        Landmark::RightEyebrowUpperMidpoint,
        Landmark::MidpointBetweenEyes,
        Landmark::ForeheadGlabella,
        Landmark::NoseTip,
        Landmark::NoseBottomLeft,
        Landmark::NoseBottomRight,
        Landmark::MouthLeft,
        Landmark::MouthRight,
        Landmark::MouthCenter,
        Landmark::UpperLip,
        Landmark::LowerLip,
        Landmark::ChinGnathion,
        Landmark::LeftCheekCenter,
        Landmark::RightCheekCenter,
        Landmark::LeftEarTragion,
        Landmark::RightEarTragion,
    ];

    pub fn name(self) -> &'static str {
        use Landmark::*;
        match self {
            LeftEye => "LEFT_EYE",
            RightEye => "RIGHT_EYE",
            LeftEyeLeftCorner => "LEFT_EYE_LEFT_CORNER",
            LeftEyeRightCorner => "LEFT_EYE_RIGHT_CORNER",
            RightEyeLeftCorner => "RIGHT_EYE_LEFT_CORNER",
            RightEyeRightCorner => "RIGHT_EYE_RIGHT_CORNER",
            LeftOfLeftEyebrow => "LEFT_OF_LEFT_EYEBROW",
            RightOfLeftEyebrow => "RIGHT_OF_LEFT_EYEBROW",
            LeftOfRightEyebrow => "LEFT_OF_RIGHT_EYEBROW",
            RightOfRightEyebrow => "RIGHT_OF_RIGHT_EYEBROW",
            LeftEyebrowUpperMidpoint => "LEFT_EYEBROW_UPPER_MIDPOINT",
            RightEyebrowUpperMidpoint => "RIGHT_EYEBROW_UPPER_MIDPOINT",
            MidpointBetweenEyes => "MIDPOINT_BETWEEN_EYES",
            ForeheadGlabella => "FOREHEAD_GLABELLA",
            NoseTip => "NOSE_TIP",
            NoseBottomLeft => "NOSE_BOTTOM_LEFT",
            NoseBottomRight => "NOSE_BOTTOM_RIGHT",
            MouthLeft => "MOUTH_LEFT",
            MouthRight => "MOUTH_RIGHT",
            MouthCenter => "MOUTH_CENTER",
            UpperLip => "UPPER_LIP",
            LowerLip => "LOWER_LIP",
            ChinGnathion => "CHIN_GNATHION",
            LeftCheekCenter => "LEFT_CHEEK_CENTER",
            RightCheekCenter => "RIGHT_CHEEK_CENTER",
            LeftEarTragion => "LEFT_EAR_TRAGION",
            RightEarTragion => "RIGHT_EAR_TRAGION",
        }
    }

    pub fn region(self) -> Region {
        use Landmark::*;
        match self {
            LeftEye | RightEye | LeftEyeLeftCorner | LeftEyeRightCorner | RightEyeLeftCorner
            | RightEyeRightCorner => Region::Eyes,
            LeftOfLeftEyebrow | RightOfLeftEyebrow | LeftOfRightEyebrow | RightOfRightEyebrow
            | LeftEyebrowUpperMidpoint | RightEyebrowUpperMidpoint | MidpointBetweenEyes
            | ForeheadGlabella => Region::Brows,
            NoseTip => Region::Nose,
            NoseBottomLeft | NoseBottomRight | MouthLeft | MouthRight | MouthCenter | UpperLip
            | LowerLip | ChinGnathion => Region::Occludable,
            LeftCheekCenter | RightCheekCenter => Region::Cheeks,
            LeftEarTragion | RightEarTragion => Region::Ears,
        }
    }
}

impl fmt::Display for Landmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown landmark name {0:?}")]
pub struct UnknownLandmark(pub alloc::string::String);

impl FromStr for Landmark {
    type Err = UnknownLandmark;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Landmark::ALL
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| UnknownLandmark(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LandmarkError {
    #[error("confidence {1} for {0} outside [0, 1]")]
    Confidence(Landmark, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkEntry {
    pub confidence: f64,
    pub position: Option<(f64, f64)>,
}

/// Per-landmark confidences for one detected face. Missing landmarks count as
/// undetected.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LandmarkSet {
    entries: BTreeMap<Landmark, LandmarkEntry>,
}

impl LandmarkSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every landmark at the same confidence.
    pub fn uniform(confidence: f64) -> Result<Self, LandmarkError> {
        let mut set = Self::new();
        for l in Landmark::ALL {
            set.insert(l, confidence, None)?;
        }
        Ok(set)
    }

    pub fn insert(
        &mut self,
        landmark: Landmark,
        confidence: f64,
        position: Option<(f64, f64)>,
    ) -> Result<(), LandmarkError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(LandmarkError::Confidence(landmark, confidence));
        }
        self.entries.insert(landmark, LandmarkEntry { confidence, position });
        Ok(())
    }

    /// Sets every landmark of `region` to `confidence`.
    pub fn with_region(mut self, region: Region, confidence: f64) -> Result<Self, LandmarkError> {
        for l in Landmark::ALL.into_iter().filter(|l| l.region() == region) {
            let position = self.entries.get(&l).and_then(|e| e.position);
            self.insert(l, confidence, position)?;
        }
        Ok(self)
    }

    pub fn get(&self, landmark: Landmark) -> Option<&LandmarkEntry> {
        self.entries.get(&landmark)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Landmark, &LandmarkEntry)> {
        self.entries.iter().map(|(l, e)| (*l, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Mean confidence over every landmark of `region`, absent ones as zero.
    pub fn region_mean(&self, region: Region) -> f64 {
        let (sum, n) = Landmark::ALL
            .iter()
            .filter(|l| l.region() == region)
            .fold((0.0, 0usize), |(s, n), l| {
                (s + self.entries.get(l).map_or(0.0, |e| e.confidence), n + 1)
            });
        sum / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaskThresholds {
    /// Minimum mean eye confidence for a face to count as present.
    pub t_face: f64,
    /// Maximum mean lower-face confidence for the face to count as masked.
    pub t_occluded: f64,
}

impl Default for MaskThresholds {
    fn default() -> Self {
        MaskThresholds { t_face: 0.6, t_occluded: 0.35 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaskVerdict {
    pub masked: bool,
    pub score: f64,
    pub missing_face: bool,
    pub detail: BTreeMap<Region, f64>,
}

impl MaskVerdict {
    /// Verdict used whenever no landmarks could be obtained.
    pub fn no_face() -> Self {
        MaskVerdict { masked: false, score: 0.0, missing_face: true, detail: BTreeMap::new() }
    }

    /// Only a masked, present face is admitted.
    pub fn admits(&self) -> bool {
        self.masked && !self.missing_face
    }
}

const REGIONS: [Region; 6] = [
    Region::Eyes,
    Region::Brows,
    Region::Nose,
    Region::Occludable,
    Region::Cheeks,
    Region::Ears,
];

pub fn classify_mask(landmarks: &LandmarkSet, thresholds: &MaskThresholds) -> MaskVerdict {
    let detail: BTreeMap<Region, f64> =
        REGIONS.iter().map(|&r| (r, landmarks.region_mean(r))).collect();
    let eyes = detail[&Region::Eyes];
    let occluded = detail[&Region::Occludable];

    if landmarks.is_empty() || eyes < thresholds.t_face {
        return MaskVerdict { detail, ..MaskVerdict::no_face() };
    }
    MaskVerdict {
        masked: occluded <= thresholds.t_occluded,
        score: (eyes * (1.0 - occluded)).clamp(0.0, 1.0),
        missing_face: false,
        detail,
    }
}
