//! Evaluation metrics: Accuracy@161km, Mean Error, and the area under the
//! normalized natural-log error-distance curve.
//!
//! An estimation that produced no coordinates is scored at the maximum
//! possible error distance of 20,039 km (half of the Earth's circumference);
//! resolved coordinates are scored by great-circle distance to gold, capped
//! at the same bound.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::gazetteer::{categorize_mention, Gazetteer, PlaceCategory};
use crate::geodesy::{haversine_km, DistanceKm, GeoPoint, MAX_ERROR_KM};
use crate::predictions::PredictionSet;
use crate::voting::Resolution;

/// Default accuracy threshold: 100 miles in kilometers.
pub const ACCURACY_THRESHOLD_KM: f64 = 161.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MetricsError {
    #[error("metrics need at least one error value")]
    EmptyInput,
    #[error("macro average over reports from different systems")]
    MixedSystems,
    #[error("macro average over reports with different thresholds or AUC modes")]
    MixedOptions,
}

/// Distance errors of the evaluated mentions, in evaluation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorVector(Vec<DistanceKm>);

impl ErrorVector {
    pub fn new(errors: Vec<DistanceKm>) -> Self {
        Self(errors)
    }

    pub fn push(&mut self, error: DistanceKm) {
        self.0.push(error);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|d| d.km())
    }
}

/// Distance error of a resolution against the gold coordinates: great-circle
/// distance capped at 20,039 km when resolved, exactly 20,039 km when not.
pub fn error_distance(resolution: &Resolution, gold: GeoPoint) -> DistanceKm {
    match resolution.point() {
        Some(point) => haversine_km(point, gold),
        None => DistanceKm::new(MAX_ERROR_KM),
    }
}

/// Fraction of errors strictly smaller than the threshold.
pub fn accuracy_at(errors: &ErrorVector, threshold_km: f64) -> Result<f64, MetricsError> {
    if errors.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let hits = errors.iter().filter(|&x| x < threshold_km).count();
    Ok(hits as f64 / errors.len() as f64)
}

/// Arithmetic mean of the error distances.
pub fn mean_error(errors: &ErrorVector) -> Result<f64, MetricsError> {
    if errors.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// Reading of the area-under-the-curve integral over normalized log errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AucMode {
    /// Mean of `ln(x_i + 1) / ln(20039)` over all mentions.
    #[default]
    Mean,
    /// Trapezoidal area under the ascending-sorted normalized-log curve with
    /// the index axis rescaled to `[0, 1]`.
    Trapezoid,
}

impl AucMode {
    pub fn label(&self) -> &'static str {
        match self {
            AucMode::Mean => "mean",
            AucMode::Trapezoid => "trapezoid",
        }
    }
}

impl std::fmt::Display for AucMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for AucMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(AucMode::Mean),
            "trapezoid" => Ok(AucMode::Trapezoid),
            other => Err(format!("unknown AUC mode {other:?} (mean|trapezoid)")),
        }
    }
}

/// Area under the normalized log error-distance curve. Lower is better; an
/// all-zero vector scores 0 and an all-invalid vector scores
/// `ln(20040)/ln(20039)` (just above 1).
pub fn auc_norm_log(errors: &ErrorVector, mode: AucMode) -> Result<f64, MetricsError> {
    if errors.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let denom = MAX_ERROR_KM.ln();
    match mode {
        AucMode::Mean => {
            let sum: f64 = errors.iter().map(|x| (x + 1.0).ln() / denom).sum();
            Ok(sum / errors.len() as f64)
        }
        AucMode::Trapezoid => {
            let mut ys: Vec<f64> = errors.iter().map(|x| (x + 1.0).ln() / denom).collect();
            ys.sort_by(|a, b| a.partial_cmp(b).expect("normalized errors are finite"));
            if ys.len() == 1 {
                return Ok(ys[0]);
            }
            let area: f64 = ys.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum();
            Ok(area / (ys.len() - 1) as f64)
        }
    }
}

/// Anything that can answer "where did this system place mention X": the
/// voting resolutions, or a raw prediction set scored as a system of its own.
pub trait CoordinateSource {
    fn coordinates(&self, mention_id: &str) -> Option<GeoPoint>;
}

impl CoordinateSource for BTreeMap<String, Resolution> {
    fn coordinates(&self, mention_id: &str) -> Option<GeoPoint> {
        self.get(mention_id).and_then(Resolution::point)
    }
}

impl CoordinateSource for PredictionSet {
    fn coordinates(&self, mention_id: &str) -> Option<GeoPoint> {
        self.get(mention_id).and_then(|p| p.point())
    }
}

/// Evaluation knobs shared across a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub threshold_km: f64,
    pub auc_mode: AucMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            threshold_km: ACCURACY_THRESHOLD_KM,
            auc_mode: AucMode::Mean,
        }
    }
}

/// Per-category mention count and accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CategoryStats {
    pub n: usize,
    pub accuracy: f64,
}

/// All metrics for one (system, dataset) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub system: String,
    pub dataset: String,
    pub n: usize,
    pub threshold_km: f64,
    pub accuracy: f64,
    pub mean_error_km: f64,
    pub auc: f64,
    pub auc_mode: AucMode,
    pub per_category: BTreeMap<PlaceCategory, CategoryStats>,
}

/// Scores a system on a corpus. Every corpus mention is evaluated; mentions
/// the source has no coordinates for are scored at the 20,039 km penalty.
/// The per-category breakdown uses the gazetteer when one is supplied and
/// surface keywords otherwise.
pub fn evaluate<S: CoordinateSource>(
    system: &str,
    dataset: &str,
    source: &S,
    corpus: &Corpus,
    gazetteer: Option<&Gazetteer>,
    opts: &EvalOptions,
) -> Result<MetricsReport, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut errors = ErrorVector::default();
    let mut per_category: BTreeMap<PlaceCategory, (usize, usize)> = BTreeMap::new();
    for mention in &corpus.mentions {
        let error = match source.coordinates(&mention.mention_id) {
            Some(point) => haversine_km(point, mention.gold),
            None => DistanceKm::new(MAX_ERROR_KM),
        };
        let category = categorize_mention(mention, gazetteer);
        let slot = per_category.entry(category).or_insert((0, 0));
        slot.0 += 1;
        if error.km() < opts.threshold_km {
            slot.1 += 1;
        }
        errors.push(error);
    }

    Ok(MetricsReport {
        system: system.to_string(),
        dataset: dataset.to_string(),
        n: errors.len(),
        threshold_km: opts.threshold_km,
        accuracy: accuracy_at(&errors, opts.threshold_km)?,
        mean_error_km: mean_error(&errors)?,
        auc: auc_norm_log(&errors, opts.auc_mode)?,
        auc_mode: opts.auc_mode,
        per_category: per_category
            .into_iter()
            .map(|(cat, (n, hits))| {
                (
                    cat,
                    CategoryStats {
                        n,
                        accuracy: hits as f64 / n as f64,
                    },
                )
            })
            .collect(),
    })
}

/// Unweighted mean of each metric across per-dataset reports of one system
/// (macro averaging: every dataset counts equally, regardless of size).
/// `n` is the total mention count; per-category entries are averaged over the
/// reports that contain the category.
pub fn macro_average(reports: &[MetricsReport]) -> Result<MetricsReport, MetricsError> {
    let first = reports.first().ok_or(MetricsError::EmptyInput)?;
    if reports.iter().any(|r| r.system != first.system) {
        return Err(MetricsError::MixedSystems);
    }
    if reports
        .iter()
        .any(|r| r.threshold_km != first.threshold_km || r.auc_mode != first.auc_mode)
    {
        return Err(MetricsError::MixedOptions);
    }
    let k = reports.len() as f64;
    let mut per_category: BTreeMap<PlaceCategory, (usize, f64, usize)> = BTreeMap::new();
    for report in reports {
        for (cat, stats) in &report.per_category {
            let slot = per_category.entry(*cat).or_insert((0, 0.0, 0));
            slot.0 += stats.n;
            slot.1 += stats.accuracy;
            slot.2 += 1;
        }
    }
    Ok(MetricsReport {
        system: first.system.clone(),
        dataset: "macro".to_string(),
        n: reports.iter().map(|r| r.n).sum(),
        threshold_km: first.threshold_km,
        accuracy: reports.iter().map(|r| r.accuracy).sum::<f64>() / k,
        mean_error_km: reports.iter().map(|r| r.mean_error_km).sum::<f64>() / k,
        auc: reports.iter().map(|r| r.auc).sum::<f64>() / k,
        auc_mode: first.auc_mode,
        per_category: per_category
            .into_iter()
            .map(|(cat, (n, acc_sum, count))| {
                (
                    cat,
                    CategoryStats {
                        n,
                        accuracy: acc_sum / count as f64,
                    },
                )
            })
            .collect(),
    })
}
