//! Per-approach coordinate predictions produced by external systems.
//!
//! Predictions arrive as UTF-8 JSON lines, one file per approach per dataset.
//! A record is either `{"approach": .., "mention_id": .., "lat": .., "lon": ..}`
//! or `{"approach": .., "mention_id": .., "invalid": true}`. Coordinates of
//! exactly (0, 0) are the sentinel external systems emit when they fail to
//! locate a toponym, so they normalize to invalid, as do out-of-range values.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::GeoPoint;

/// One approach's answer for one mention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    Valid(GeoPoint),
    Invalid,
}

impl Prediction {
    /// Applies the validity rules to raw coordinates: out-of-range values and
    /// the exact (0, 0) sentinel become invalid, everything else is a
    /// normalized point.
    pub fn from_latlon(lat: f64, lon: f64) -> Self {
        if lat == 0.0 && lon == 0.0 {
            return Prediction::Invalid;
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Prediction::Invalid;
        }
        match GeoPoint::new(lat, lon) {
            Ok(p) => Prediction::Valid(p),
            Err(_) => Prediction::Invalid,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Prediction::Valid(_))
    }

    pub fn point(&self) -> Option<GeoPoint> {
        match self {
            Prediction::Valid(p) => Some(*p),
            Prediction::Invalid => None,
        }
    }
}

/// Wire record of the prediction file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub approach: String,
    pub mention_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub invalid: bool,
}

/// Normalizes a raw record: an explicit invalid flag, missing or out-of-range
/// coordinates, or the exact (0, 0) sentinel all yield an invalid prediction.
pub fn normalize_invalid(record: &PredictionRecord) -> Prediction {
    if record.invalid {
        return Prediction::Invalid;
    }
    match (record.lat, record.lon) {
        (Some(lat), Some(lon)) => Prediction::from_latlon(lat, lon),
        _ => Prediction::Invalid,
    }
}

/// All predictions of one approach, keyed by mention id.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub approach_id: String,
    predictions: BTreeMap<String, Prediction>,
}

impl PredictionSet {
    pub fn new(approach_id: impl Into<String>) -> Self {
        Self {
            approach_id: approach_id.into(),
            predictions: BTreeMap::new(),
        }
    }

    /// Inserts a prediction; a duplicate mention id is rejected.
    pub fn insert(&mut self, mention_id: impl Into<String>, prediction: Prediction) -> bool {
        let id = mention_id.into();
        if self.predictions.contains_key(&id) {
            return false;
        }
        self.predictions.insert(id, prediction);
        true
    }

    pub fn get(&self, mention_id: &str) -> Option<&Prediction> {
        self.predictions.get(mention_id)
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Prediction)> {
        self.predictions.iter()
    }
}

#[derive(Debug, Error)]
pub enum PredictionError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: invalid JSON record: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: approach {found:?} differs from {expected:?} in the same file")]
    MixedApproaches {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: duplicate prediction for mention {mention_id:?}")]
    DuplicateMention { line: usize, mention_id: String },
    #[error("no prediction records found; the approach id is unknown")]
    NoRecords,
}

/// Parses a prediction file. Blank lines and `#` comment lines are skipped;
/// every record must carry the same approach id, and each mention may appear
/// only once.
pub fn read_predictions<R: Read>(reader: R) -> Result<PredictionSet, PredictionError> {
    let mut set: Option<PredictionSet> = None;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| PredictionError::Io {
            path: "<stream>".to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(trimmed)
            .map_err(|source| PredictionError::Json { line: line_no, source })?;
        let prediction = normalize_invalid(&record);
        let set = set.get_or_insert_with(|| PredictionSet::new(record.approach.clone()));
        if record.approach != set.approach_id {
            return Err(PredictionError::MixedApproaches {
                line: line_no,
                expected: set.approach_id.clone(),
                found: record.approach,
            });
        }
        if !set.insert(record.mention_id.clone(), prediction) {
            return Err(PredictionError::DuplicateMention {
                line: line_no,
                mention_id: record.mention_id,
            });
        }
    }
    set.ok_or(PredictionError::NoRecords)
}

pub fn load_predictions(path: &Path) -> Result<PredictionSet, PredictionError> {
    let file = File::open(path).map_err(|source| PredictionError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_predictions(file).map_err(|e| match e {
        PredictionError::Io { source, .. } => PredictionError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Writes the set back out, one JSON record per mention in id order. Invalid
/// predictions are emitted with the explicit flag, so sentinel inputs
/// round-trip as explicit invalid records.
pub fn write_predictions<W: Write>(set: &PredictionSet, mut writer: W) -> std::io::Result<()> {
    for (mention_id, prediction) in set.iter() {
        let record = match prediction {
            Prediction::Valid(p) => PredictionRecord {
                approach: set.approach_id.clone(),
                mention_id: mention_id.clone(),
                lat: Some(p.lat()),
                lon: Some(p.lon()),
                invalid: false,
            },
            Prediction::Invalid => PredictionRecord {
                approach: set.approach_id.clone(),
                mention_id: mention_id.clone(),
                lat: None,
                lon: None,
                invalid: true,
            },
        };
        let json = serde_json::to_string(&record).expect("record serialization cannot fail");
        writeln!(writer, "{json}")?;
    }
    Ok(())
}
