//! Sensitivity analyses for the voting ensemble: leave-one-out ablation and
//! parameter sweeps over the clustering radius and density threshold.
//!
//! Every configuration is re-run from scratch; per-mention instances hold at
//! most a couple dozen points, so correctness wins over incremental tricks.

use thiserror::Error;

use crate::clustering::ClusterParams;
use crate::corpus::Corpus;
use crate::metrics::{evaluate, macro_average, EvalOptions, MetricsError, MetricsReport};
use crate::predictions::PredictionSet;
use crate::voting::{resolve_corpus, EnsembleConfig, VotingError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("ablation needs at least two approaches in the basic ensemble")]
    TooFewApproaches,
    #[error("no datasets supplied")]
    NoDatasets,
    #[error("sweep needs at least one parameter value")]
    NoValues,
    #[error("sweep values must be strictly increasing")]
    UnsortedValues,
    #[error("invalid {parameter} value {value}")]
    InvalidValue { parameter: &'static str, value: f64 },
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// One dataset and the prediction files that cover it.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub corpus: Corpus,
    pub predictions: Vec<PredictionSet>,
}

/// Macro-averaged ensemble metrics over all datasets for one configuration.
/// Prediction sets for approaches outside the configuration are ignored, so
/// degraded ensembles can run against the full prediction pool.
pub fn ensemble_macro(
    config: &EnsembleConfig,
    datasets: &[DatasetBundle],
    opts: &EvalOptions,
) -> Result<MetricsReport, AnalysisError> {
    if datasets.is_empty() {
        return Err(AnalysisError::NoDatasets);
    }
    let mut reports = Vec::with_capacity(datasets.len());
    for bundle in datasets {
        let sets: Vec<PredictionSet> = bundle
            .predictions
            .iter()
            .filter(|s| config.contains(&s.approach_id))
            .cloned()
            .collect();
        let resolutions = resolve_corpus(&bundle.corpus, &sets, config)?;
        reports.push(evaluate(
            "ensemble",
            &bundle.corpus.name,
            &resolutions,
            &bundle.corpus,
            None,
            opts,
        )?);
    }
    Ok(macro_average(&reports)?)
}

/// Contribution of one approach: basic-ensemble metric minus the metric of
/// the ensemble with that approach removed. Positive `delta_accuracy` means
/// the approach helps accuracy; positive `delta_me`/`delta_auc` mean it adds
/// error (those metrics are better when lower).
#[derive(Debug, Clone, PartialEq)]
pub struct AblationResult {
    pub approach_id: String,
    pub delta_accuracy: f64,
    pub delta_auc: f64,
    pub delta_me: f64,
}

/// Leave-one-out ablation: for every approach of the basic ensemble, builds
/// the degraded ensemble without it (order otherwise preserved), evaluates
/// both on the same inputs, and reports the metric differences.
pub fn ablate(
    basic: &EnsembleConfig,
    datasets: &[DatasetBundle],
    opts: &EvalOptions,
) -> Result<Vec<AblationResult>, AnalysisError> {
    if basic.approaches().len() < 2 {
        return Err(AnalysisError::TooFewApproaches);
    }
    let base = ensemble_macro(basic, datasets, opts)?;
    let mut results = Vec::with_capacity(basic.approaches().len());
    for approach in basic.approaches() {
        let degraded_config = basic.without_approach(&approach.id)?;
        let degraded = ensemble_macro(&degraded_config, datasets, opts)?;
        results.push(AblationResult {
            approach_id: approach.id.clone(),
            delta_accuracy: base.accuracy - degraded.accuracy,
            delta_auc: base.auc - degraded.auc,
            delta_me: base.mean_error_km - degraded.mean_error_km,
        });
    }
    Ok(results)
}

/// Which clustering parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    EpsKm,
    MinPts,
}

impl SweepParameter {
    pub fn label(&self) -> &'static str {
        match self {
            SweepParameter::EpsKm => "eps_km",
            SweepParameter::MinPts => "min_pts",
        }
    }

    /// The stock sweep grids: eps from 1 to 800 km in steps of 30, and
    /// min_pts from 1 to 11 in steps of 1.
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            SweepParameter::EpsKm => range_values(1.0, 800.0, 30.0),
            SweepParameter::MinPts => range_values(1.0, 11.0, 1.0),
        }
    }
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Values `from, from+step, …` not exceeding `to`.
pub fn range_values(from: f64, to: f64, step: f64) -> Vec<f64> {
    let mut values = Vec::new();
    if step <= 0.0 || from > to {
        return values;
    }
    let mut k = 0u32;
    loop {
        let v = from + step * f64::from(k);
        if v > to {
            break;
        }
        values.push(v);
        k += 1;
    }
    values
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub accuracy: f64,
    pub auc: f64,
    pub mean_error_km: f64,
}

/// Macro metrics of the ensemble at each parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
}

/// Re-runs the full voting evaluation once per parameter value, holding every
/// other configuration field fixed.
pub fn sweep(
    config: &EnsembleConfig,
    parameter: SweepParameter,
    values: &[f64],
    datasets: &[DatasetBundle],
    opts: &EvalOptions,
) -> Result<SweepCurve, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::NoValues);
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::UnsortedValues);
    }
    for &value in values {
        let valid = match parameter {
            SweepParameter::EpsKm => value.is_finite() && value > 0.0,
            SweepParameter::MinPts => value.fract() == 0.0 && value >= 1.0 && value <= u32::MAX as f64,
        };
        if !valid {
            return Err(AnalysisError::InvalidValue {
                parameter: parameter.label(),
                value,
            });
        }
    }

    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let params = match parameter {
            SweepParameter::EpsKm => ClusterParams::new(value, config.params().min_pts()),
            SweepParameter::MinPts => ClusterParams::new(config.params().eps_km(), value as u32),
        }
        .map_err(VotingError::from)?;
        let report = ensemble_macro(&config.with_params(params), datasets, opts)?;
        points.push(SweepPoint {
            value,
            accuracy: report.accuracy,
            auc: report.auc,
            mean_error_km: report.mean_error_km,
        });
    }
    Ok(SweepCurve { parameter, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Mention;
    use crate::geodesy::GeoPoint;
    use crate::predictions::Prediction;
    use crate::voting::ApproachWeight;
    use std::collections::BTreeMap;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    fn corpus(n: usize) -> Corpus {
        Corpus {
            name: "fix".into(),
            mentions: (0..n)
                .map(|i| Mention {
                    mention_id: format!("m{i}"),
                    doc_id: "d0".into(),
                    surface: format!("Spot {i}"),
                    span: (0, 4),
                    gold: p(10.0 + i as f64 * 0.5, 10.0),
                    gazetteer_id: None,
                    context: None,
                })
                .collect(),
            documents: BTreeMap::new(),
        }
    }

    /// A is always exactly right, B is always ~1,000 km east.
    fn two_approach_bundle(n: usize) -> DatasetBundle {
        let corpus = corpus(n);
        let mut a = PredictionSet::new("A");
        let mut b = PredictionSet::new("B");
        for m in &corpus.mentions {
            a.insert(m.mention_id.clone(), Prediction::Valid(m.gold));
            let off = GeoPoint::new(m.gold.lat(), m.gold.lon() + 9.2).unwrap();
            b.insert(m.mention_id.clone(), Prediction::Valid(off));
        }
        DatasetBundle {
            corpus,
            predictions: vec![a, b],
        }
    }

    fn two_approach_config() -> EnsembleConfig {
        EnsembleConfig::new(
            vec![
                ApproachWeight { id: "A".into(), weight: 1 },
                ApproachWeight { id: "B".into(), weight: 1 },
            ],
            ClusterParams::new(10.0, 2).unwrap(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn ablation_signs_reflect_contribution() {
        let bundle = two_approach_bundle(6);
        let results = ablate(&two_approach_config(), &[bundle], &EvalOptions::default()).unwrap();
        assert_eq!(results.len(), 2);
        let a = results.iter().find(|r| r.approach_id == "A").unwrap();
        let b = results.iter().find(|r| r.approach_id == "B").unwrap();
        // Basic falls back to A (first valid) and is always right. Without A
        // everything lands on B, ~1,000 km off: A carries the whole accuracy,
        // so its delta is positive; removing B changes nothing.
        assert!(a.delta_accuracy > 0.0, "delta_accuracy {}", a.delta_accuracy);
        assert!(a.delta_me < 0.0);
        assert!(a.delta_auc < 0.0);
        assert!(b.delta_accuracy >= 0.0);
        assert_eq!(b.delta_accuracy, 0.0);
        assert_eq!(b.delta_me, 0.0);
    }

    #[test]
    fn removing_all_invalid_approach_changes_nothing() {
        let mut bundle = two_approach_bundle(5);
        let mut c = PredictionSet::new("C");
        for m in &bundle.corpus.mentions {
            c.insert(m.mention_id.clone(), Prediction::Invalid);
        }
        bundle.predictions.push(c);
        let config = EnsembleConfig::new(
            vec![
                ApproachWeight { id: "A".into(), weight: 1 },
                ApproachWeight { id: "B".into(), weight: 1 },
                ApproachWeight { id: "C".into(), weight: 1 },
            ],
            ClusterParams::new(10.0, 2).unwrap(),
            0,
        )
        .unwrap();
        let results = ablate(&config, &[bundle], &EvalOptions::default()).unwrap();
        let c = results.iter().find(|r| r.approach_id == "C").unwrap();
        assert_eq!(c.delta_accuracy, 0.0);
        assert_eq!(c.delta_auc, 0.0);
        assert_eq!(c.delta_me, 0.0);
    }

    #[test]
    fn ablation_yields_one_result_per_approach() {
        let bundle = two_approach_bundle(3);
        let results = ablate(&two_approach_config(), &[bundle], &EvalOptions::default()).unwrap();
        let ids: Vec<&str> = results.iter().map(|r| r.approach_id.as_str()).collect();
        assert_eq!(ids, vec!["A", "B"]);
    }

    #[test]
    fn ablation_requires_two_approaches() {
        let bundle = two_approach_bundle(3);
        let config = EnsembleConfig::new(
            vec![ApproachWeight { id: "A".into(), weight: 1 }],
            ClusterParams::new(10.0, 2).unwrap(),
            0,
        )
        .unwrap();
        assert!(matches!(
            ablate(&config, &[bundle], &EvalOptions::default()),
            Err(AnalysisError::TooFewApproaches)
        ));
    }

    #[test]
    fn ablation_deltas_bounded_for_accuracy() {
        let bundle = two_approach_bundle(4);
        let results = ablate(&two_approach_config(), &[bundle], &EvalOptions::default()).unwrap();
        for r in results {
            assert!((-1.0..=1.0).contains(&r.delta_accuracy));
        }
    }

    #[test]
    fn default_eps_grid_has_27_points() {
        let values = SweepParameter::EpsKm.default_values();
        assert_eq!(values.len(), 27);
        assert_eq!(values[0], 1.0);
        assert_eq!(values[1], 31.0);
        assert_eq!(*values.last().unwrap(), 781.0);
    }

    #[test]
    fn default_min_pts_grid_has_11_points() {
        let values = SweepParameter::MinPts.default_values();
        assert_eq!(values.len(), 11);
        assert_eq!(values, (1..=11).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn sweep_single_value_matches_direct_evaluation() {
        let bundle = two_approach_bundle(5);
        let config = two_approach_config();
        let opts = EvalOptions::default();
        let curve = sweep(&config, SweepParameter::EpsKm, &[10.0], std::slice::from_ref(&bundle), &opts).unwrap();
        assert_eq!(curve.points.len(), 1);
        let direct = ensemble_macro(&config, &[bundle], &opts).unwrap();
        assert_eq!(curve.points[0].accuracy, direct.accuracy);
        assert_eq!(curve.points[0].auc, direct.auc);
        assert_eq!(curve.points[0].mean_error_km, direct.mean_error_km);
    }

    #[test]
    fn sweep_points_match_independent_runs() {
        let bundle = two_approach_bundle(5);
        let config = two_approach_config();
        let opts = EvalOptions::default();
        let values = [5.0, 500.0, 1500.0];
        let curve = sweep(&config, SweepParameter::EpsKm, &values, std::slice::from_ref(&bundle), &opts).unwrap();
        for point in &curve.points {
            let params = ClusterParams::new(point.value, config.params().min_pts()).unwrap();
            let direct = ensemble_macro(&config.with_params(params), std::slice::from_ref(&bundle), &opts).unwrap();
            assert_eq!(point.accuracy, direct.accuracy);
            assert_eq!(point.mean_error_km, direct.mean_error_km);
        }
        // At 1,500 km, A and B cluster together; the centroid sits ~500 km
        // from gold, so accuracy collapses while it is perfect at eps = 5.
        assert_eq!(curve.points[0].accuracy, 1.0);
        assert_eq!(curve.points[2].accuracy, 0.0);
    }

    #[test]
    fn sweep_rejects_bad_values() {
        let bundle = two_approach_bundle(2);
        let config = two_approach_config();
        let opts = EvalOptions::default();
        assert!(matches!(
            sweep(&config, SweepParameter::EpsKm, &[], std::slice::from_ref(&bundle), &opts),
            Err(AnalysisError::NoValues)
        ));
        assert!(matches!(
            sweep(&config, SweepParameter::EpsKm, &[10.0, 5.0], std::slice::from_ref(&bundle), &opts),
            Err(AnalysisError::UnsortedValues)
        ));
        assert!(matches!(
            sweep(&config, SweepParameter::EpsKm, &[-3.0, 5.0], std::slice::from_ref(&bundle), &opts),
            Err(AnalysisError::InvalidValue { .. })
        ));
        assert!(matches!(
            sweep(&config, SweepParameter::MinPts, &[0.0, 1.0], std::slice::from_ref(&bundle), &opts),
            Err(AnalysisError::InvalidValue { .. })
        ));
        assert!(matches!(
            sweep(&config, SweepParameter::MinPts, &[1.5], &[bundle], &opts),
            Err(AnalysisError::InvalidValue { .. })
        ));
    }

    #[test]
    fn ablation_is_deterministic_across_runs() {
        let bundle = two_approach_bundle(6);
        let config = two_approach_config();
        let opts = EvalOptions::default();
        let first = ablate(&config, std::slice::from_ref(&bundle), &opts).unwrap();
        let second = ablate(&config, &[bundle], &opts).unwrap();
        assert_eq!(first, second);
    }
}
