//! The spatial-clustering vote: cluster the weighted per-approach estimates,
//! take the dominant cluster's centroid, otherwise fall back to the first
//! valid estimate in configured order, otherwise report the mention as
//! unresolvable.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{
    dbscan_weighted, largest_cluster, ClusterParams, ClusterParamsError, WeightedEstimate,
};
use crate::corpus::Corpus;
use crate::geodesy::{spherical_centroid, GeoPoint};
use crate::predictions::{Prediction, PredictionSet};

/// One ensemble member and its vote count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachWeight {
    pub id: String,
    pub weight: u32,
}

#[derive(Debug, Error)]
pub enum VotingError {
    #[error("ensemble must list at least one approach")]
    EmptyEnsemble,
    #[error("approach {0:?} listed twice in the ensemble")]
    DuplicateApproach(String),
    #[error("approach {0:?} has weight 0; weights must be at least 1")]
    ZeroWeight(String),
    #[error("prediction carries approach {0:?} which is not in the ensemble configuration")]
    UnknownApproach(String),
    #[error("two prediction sets supplied for approach {0:?}")]
    DuplicatePredictionSet(String),
    #[error(transparent)]
    Params(#[from] ClusterParamsError),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid ensemble configuration {path}: {message}")]
    Config { path: String, message: String },
}

/// Ordered approach list with weights, DBSCAN parameters, and the tie-break
/// seed. Order is significant: it drives the fallback traversal.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    approaches: Vec<ApproachWeight>,
    params: ClusterParams,
    rng_seed: u64,
}

impl EnsembleConfig {
    pub fn new(
        approaches: Vec<ApproachWeight>,
        params: ClusterParams,
        rng_seed: u64,
    ) -> Result<Self, VotingError> {
        if approaches.is_empty() {
            return Err(VotingError::EmptyEnsemble);
        }
        let mut seen = HashSet::new();
        for a in &approaches {
            if a.weight == 0 {
                return Err(VotingError::ZeroWeight(a.id.clone()));
            }
            if !seen.insert(a.id.as_str()) {
                return Err(VotingError::DuplicateApproach(a.id.clone()));
            }
        }
        Ok(Self {
            approaches,
            params,
            rng_seed,
        })
    }

    pub fn approaches(&self) -> &[ApproachWeight] {
        &self.approaches
    }

    pub fn params(&self) -> &ClusterParams {
        &self.params
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn contains(&self, approach_id: &str) -> bool {
        self.approaches.iter().any(|a| a.id == approach_id)
    }

    pub fn with_params(&self, params: ClusterParams) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..self.clone()
        }
    }

    /// The configuration minus one approach, order otherwise preserved.
    pub fn without_approach(&self, approach_id: &str) -> Result<Self, VotingError> {
        if !self.contains(approach_id) {
            return Err(VotingError::UnknownApproach(approach_id.to_string()));
        }
        let approaches = self
            .approaches
            .iter()
            .filter(|a| a.id != approach_id)
            .cloned()
            .collect();
        EnsembleConfig::new(approaches, self.params, self.rng_seed)
    }

    /// Equal-weight ensemble over the given approaches, in the given order.
    pub fn equal_weights(
        ids: impl IntoIterator<Item = String>,
        params: ClusterParams,
        rng_seed: u64,
    ) -> Result<Self, VotingError> {
        let approaches = ids
            .into_iter()
            .map(|id| ApproachWeight { id, weight: 1 })
            .collect();
        EnsembleConfig::new(approaches, params, rng_seed)
    }
}

/// The shipped default: GENRE (3), BLINK (2), LUKE (2), CamCoder (1),
/// SHS (1), CBH (1), EdinburghGeoparser (1), with eps = 10 km, min_pts = 2,
/// and tie-break seed 0.
impl Default for EnsembleConfig {
    fn default() -> Self {
        let approaches = [
            ("GENRE", 3),
            ("BLINK", 2),
            ("LUKE", 2),
            ("CamCoder", 1),
            ("SHS", 1),
            ("CBH", 1),
            ("EdinburghGeoparser", 1),
        ]
        .into_iter()
        .map(|(id, weight)| ApproachWeight {
            id: id.to_string(),
            weight,
        })
        .collect();
        EnsembleConfig::new(approaches, ClusterParams::new(10.0, 2).unwrap(), 0)
            .expect("default configuration is valid")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ConfigFile {
    approaches: Vec<ApproachWeight>,
    eps_km: f64,
    min_pts: u32,
    #[serde(default)]
    rng_seed: u64,
}

/// Loads an ensemble configuration from a flat JSON document with keys
/// `approaches` (ordered array of `{id, weight}`), `eps_km`, `min_pts`, and
/// `rng_seed`.
pub fn load_config(path: &Path) -> Result<EnsembleConfig, VotingError> {
    let text = fs::read_to_string(path).map_err(|source| VotingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let raw: ConfigFile = serde_json::from_str(&text).map_err(|e| VotingError::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let params = ClusterParams::new(raw.eps_km, raw.min_pts)?;
    EnsembleConfig::new(raw.approaches, params, raw.rng_seed)
}

pub fn write_config<W: std::io::Write>(
    config: &EnsembleConfig,
    mut writer: W,
) -> std::io::Result<()> {
    let raw = ConfigFile {
        approaches: config.approaches.clone(),
        eps_km: config.params.eps_km(),
        min_pts: config.params.min_pts(),
        rng_seed: config.rng_seed,
    };
    let json = serde_json::to_string_pretty(&raw).expect("config serialization cannot fail");
    writeln!(writer, "{json}")
}

/// How a resolved coordinate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClusterCentroid,
    FallbackFirstValid,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::ClusterCentroid => "cluster_centroid",
            Provenance::FallbackFirstValid => "fallback_first_valid",
        }
    }
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of the vote for one mention. No sentinel coordinates are carried
/// for unresolvable mentions; the error penalty is applied at metric time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    Resolved {
        point: GeoPoint,
        provenance: Provenance,
        /// Total weight of the winning cluster, or the configured weight of
        /// the fallback approach.
        winning_weight: u32,
    },
    Invalid,
}

impl Resolution {
    pub fn point(&self) -> Option<GeoPoint> {
        match self {
            Resolution::Resolved { point, .. } => Some(*point),
            Resolution::Invalid => None,
        }
    }

    pub fn is_resolved(&self) -> bool {
        matches!(self, Resolution::Resolved { .. })
    }
}

/// Resolves one mention from its per-approach predictions.
///
/// Invalid predictions are dropped; the rest get their configured weights and
/// go through weighted DBSCAN. If any cluster forms, the result is the
/// spherical centroid of the heaviest one. Otherwise the first valid estimate
/// in configured approach order wins; with no valid estimate at all the
/// mention is unresolvable. Predictions keyed by an approach missing from the
/// configuration are a configuration error.
pub fn vote(
    predictions_by_approach: &HashMap<String, Prediction>,
    config: &EnsembleConfig,
) -> Result<Resolution, VotingError> {
    let mut unknown: Vec<&String> = predictions_by_approach
        .keys()
        .filter(|id| !config.contains(id))
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        return Err(VotingError::UnknownApproach(unknown[0].clone()));
    }

    let estimates: Vec<WeightedEstimate> = config
        .approaches()
        .iter()
        .filter_map(|a| {
            predictions_by_approach
                .get(&a.id)
                .and_then(Prediction::point)
                .map(|point| WeightedEstimate {
                    approach_id: a.id.clone(),
                    point,
                    weight: a.weight,
                })
        })
        .collect();

    let clusters = dbscan_weighted(&estimates, config.params());
    if let Some(winner) = largest_cluster(&clusters, config.rng_seed()) {
        let members: Vec<(GeoPoint, u32)> =
            winner.members.iter().map(|m| (m.point, m.weight)).collect();
        let centroid = spherical_centroid(&members).expect("clusters are never empty");
        return Ok(Resolution::Resolved {
            point: centroid.point,
            provenance: Provenance::ClusterCentroid,
            winning_weight: winner.total_weight,
        });
    }

    match estimates.first() {
        Some(first) => Ok(Resolution::Resolved {
            point: first.point,
            provenance: Provenance::FallbackFirstValid,
            winning_weight: first.weight,
        }),
        None => Ok(Resolution::Invalid),
    }
}

/// Applies [`vote`] to every mention of a corpus.
///
/// Each prediction set supplies one approach; mentions missing from a set are
/// treated as invalid for that approach. Two sets for the same approach are
/// an error, as is a set for an approach absent from the configuration.
pub fn resolve_corpus(
    corpus: &Corpus,
    prediction_sets: &[PredictionSet],
    config: &EnsembleConfig,
) -> Result<BTreeMap<String, Resolution>, VotingError> {
    let mut seen = HashSet::new();
    for set in prediction_sets {
        if !seen.insert(set.approach_id.as_str()) {
            return Err(VotingError::DuplicatePredictionSet(set.approach_id.clone()));
        }
        if !config.contains(&set.approach_id) {
            return Err(VotingError::UnknownApproach(set.approach_id.clone()));
        }
    }

    let mut resolutions = BTreeMap::new();
    for mention in &corpus.mentions {
        let mut by_approach = HashMap::with_capacity(prediction_sets.len());
        for set in prediction_sets {
            let prediction = set
                .get(&mention.mention_id)
                .copied()
                .unwrap_or(Prediction::Invalid);
            by_approach.insert(set.approach_id.clone(), prediction);
        }
        let resolution = vote(&by_approach, config)?;
        resolutions.insert(mention.mention_id.clone(), resolution);
    }
    Ok(resolutions)
}
