//! Diff-friendly output formats: metric reports as CSV and JSON, ablation and
//! sweep tables, per-mention resolution records.
//!
//! All floats are written with fixed 6-decimal formatting and all orderings
//! are stable, so identical inputs produce byte-identical files.

use crate::analysis::{AblationResult, SweepCurve};
use crate::gazetteer::PlaceCategory;
use crate::metrics::MetricsReport;
use crate::voting::Resolution;

/// Fixed 6-decimal rendering used for every float in text outputs.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.6}")
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn accuracy_metric_name(threshold_km: f64) -> String {
    format!("accuracy@{threshold_km}km")
}

/// One row per system x dataset x metric. A `#` header line records the AUC
/// mode and threshold. With `per_category` set, accuracy rows additionally
/// carry per-category counts and accuracies.
pub fn reports_to_csv(reports: &[MetricsReport], per_category: bool) -> String {
    let mut out = String::new();
    let (mode, threshold) = reports
        .first()
        .map(|r| (r.auc_mode.label(), r.threshold_km))
        .unwrap_or(("mean", crate::metrics::ACCURACY_THRESHOLD_KM));
    out.push_str(&format!("# auc_mode={mode} threshold_km={threshold}\n"));
    out.push_str("system,dataset,n,metric,value");
    if per_category {
        for cat in PlaceCategory::ALL {
            out.push_str(&format!(",{}_n,{}_accuracy", cat.label(), cat.label()));
        }
    }
    out.push('\n');

    for report in reports {
        let prefix = format!(
            "{},{},{}",
            csv_escape(&report.system),
            csv_escape(&report.dataset),
            report.n
        );
        let accuracy_name = accuracy_metric_name(report.threshold_km);
        let rows: [(&str, f64); 3] = [
            (accuracy_name.as_str(), report.accuracy),
            ("mean_error_km", report.mean_error_km),
            ("auc", report.auc),
        ];
        for (i, (metric, value)) in rows.iter().enumerate() {
            out.push_str(&format!("{prefix},{metric},{}", fmt_f64(*value)));
            if per_category {
                for cat in PlaceCategory::ALL {
                    // Category breakdown only applies to the accuracy row.
                    match (i, report.per_category.get(&cat)) {
                        (0, Some(stats)) => {
                            out.push_str(&format!(",{},{}", stats.n, fmt_f64(stats.accuracy)));
                        }
                        _ => out.push_str(",,"),
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

fn round6(value: f64) -> f64 {
    (value * 1e6).round() / 1e6
}

/// Nested JSON document carrying the same reports, floats rounded to six
/// decimals.
pub fn reports_to_json(reports: &[MetricsReport]) -> String {
    let rounded: Vec<MetricsReport> = reports
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.accuracy = round6(r.accuracy);
            r.mean_error_km = round6(r.mean_error_km);
            r.auc = round6(r.auc);
            for stats in r.per_category.values_mut() {
                stats.accuracy = round6(stats.accuracy);
            }
            r
        })
        .collect();
    let doc = serde_json::json!({
        "auc_mode": rounded.first().map(|r| r.auc_mode.label()).unwrap_or("mean"),
        "threshold_km": rounded.first().map(|r| r.threshold_km).unwrap_or(crate::metrics::ACCURACY_THRESHOLD_KM),
        "reports": rounded,
    });
    serde_json::to_string_pretty(&doc).expect("report serialization cannot fail")
}

/// `approach,delta_accuracy,delta_auc,delta_me_km`, one row per approach in
/// ensemble order.
pub fn ablation_to_csv(results: &[AblationResult]) -> String {
    let mut out = String::from("approach,delta_accuracy,delta_auc,delta_me_km\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{}\n",
            csv_escape(&r.approach_id),
            fmt_f64(r.delta_accuracy),
            fmt_f64(r.delta_auc),
            fmt_f64(r.delta_me)
        ));
    }
    out
}

/// Plot-ready long format: `parameter,value,metric,score`, one row per
/// (value, metric) pair with the threshold-named accuracy metric.
pub fn sweep_to_csv(curve: &SweepCurve, threshold_km: f64) -> String {
    let mut out = String::from("parameter,value,metric,score\n");
    let accuracy_name = accuracy_metric_name(threshold_km);
    for point in &curve.points {
        let rows: [(&str, f64); 3] = [
            (accuracy_name.as_str(), point.accuracy),
            ("mean_error_km", point.mean_error_km),
            ("auc", point.auc),
        ];
        for (metric, score) in rows {
            out.push_str(&format!(
                "{},{},{metric},{}\n",
                curve.parameter.label(),
                point.value,
                fmt_f64(score)
            ));
        }
    }
    out
}

/// One JSON line per mention:
/// `{"mention_id", "status", "lat", "lon", "provenance", "winning_weight"}`.
/// Coordinates use the fixed 6-decimal form; unresolvable mentions carry only
/// the id and status.
pub fn resolution_record(mention_id: &str, resolution: &Resolution) -> String {
    let id = serde_json::to_string(mention_id).expect("string serialization cannot fail");
    match resolution {
        Resolution::Resolved {
            point,
            provenance,
            winning_weight,
        } => format!(
            "{{\"mention_id\":{id},\"status\":\"resolved\",\"lat\":{},\"lon\":{},\"provenance\":\"{provenance}\",\"winning_weight\":{winning_weight}}}",
            fmt_f64(point.lat()),
            fmt_f64(point.lon()),
        ),
        Resolution::Invalid => {
            format!("{{\"mention_id\":{id},\"status\":\"invalid\"}}")
        }
    }
}

/// `mention_id,surface,category` rows for a categorization run.
pub fn categories_to_csv(rows: &[(String, String, PlaceCategory)]) -> String {
    let mut out = String::from("mention_id,surface,category\n");
    for (mention_id, surface, category) in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_escape(mention_id),
            csv_escape(surface),
            category.label()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{SweepParameter, SweepPoint};
    use crate::geodesy::GeoPoint;
    use crate::metrics::{AucMode, CategoryStats};
    use crate::voting::Provenance;
    use std::collections::BTreeMap;

    fn sample_report() -> MetricsReport {
        let mut per_category = BTreeMap::new();
        per_category.insert(
            PlaceCategory::AdminUnit,
            CategoryStats {
                n: 5,
                accuracy: 0.8,
            },
        );
        MetricsReport {
            system: "voting".into(),
            dataset: "lgl".into(),
            n: 10,
            threshold_km: 161.0,
            accuracy: 0.75,
            mean_error_km: 123.456789,
            auc: 0.2,
            auc_mode: AucMode::Mean,
            per_category,
        }
    }

    #[test]
    fn csv_has_one_row_per_metric_and_stable_floats() {
        let csv = reports_to_csv(&[sample_report()], false);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# auc_mode=mean threshold_km=161");
        assert_eq!(lines[1], "system,dataset,n,metric,value");
        assert_eq!(lines[2], "voting,lgl,10,accuracy@161km,0.750000");
        assert_eq!(lines[3], "voting,lgl,10,mean_error_km,123.456789");
        assert_eq!(lines[4], "voting,lgl,10,auc,0.200000");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn csv_per_category_adds_columns() {
        let csv = reports_to_csv(&[sample_report()], true);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[1].contains("admin_unit_n,admin_unit_accuracy"));
        assert!(lines[1].contains("traffic_way_n,traffic_way_accuracy"));
        assert!(lines[2].starts_with("voting,lgl,10,accuracy@161km,0.750000,5,0.800000,,"));
        // Non-accuracy rows leave the category cells empty.
        assert!(lines[3].contains("mean_error_km,123.456789,,,,"));
    }

    #[test]
    fn csv_escapes_commas_and_quotes() {
        let mut report = sample_report();
        report.dataset = "tr,news \"v2\"".into();
        let csv = reports_to_csv(&[report], false);
        assert!(csv.contains("\"tr,news \"\"v2\"\"\""));
    }

    #[test]
    fn json_is_nested_and_rounded() {
        let json = reports_to_json(&[sample_report()]);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["auc_mode"], "mean");
        assert_eq!(value["reports"][0]["system"], "voting");
        assert_eq!(value["reports"][0]["mean_error_km"], 123.456789);
        assert_eq!(value["reports"][0]["per_category"]["AdminUnit"]["n"], 5);
    }

    #[test]
    fn sweep_long_format() {
        let curve = SweepCurve {
            parameter: SweepParameter::EpsKm,
            points: vec![SweepPoint {
                value: 31.0,
                accuracy: 0.5,
                auc: 0.25,
                mean_error_km: 42.0,
            }],
        };
        let csv = sweep_to_csv(&curve, 161.0);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "parameter,value,metric,score");
        assert_eq!(lines[1], "eps_km,31,accuracy@161km,0.500000");
        assert_eq!(lines[2], "eps_km,31,mean_error_km,42.000000");
        assert_eq!(lines[3], "eps_km,31,auc,0.250000");
    }

    #[test]
    fn ablation_rows_in_input_order() {
        let rows = vec![
            AblationResult {
                approach_id: "GENRE".into(),
                delta_accuracy: 0.05,
                delta_auc: -0.01,
                delta_me: -120.5,
            },
            AblationResult {
                approach_id: "CLAVIN".into(),
                delta_accuracy: -0.01,
                delta_auc: 0.002,
                delta_me: 3.0,
            },
        ];
        let csv = ablation_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "GENRE,0.050000,-0.010000,-120.500000");
        assert_eq!(lines[2], "CLAVIN,-0.010000,0.002000,3.000000");
    }

    #[test]
    fn resolution_records_are_valid_json() {
        let resolved = Resolution::Resolved {
            point: GeoPoint::new(48.8566, 2.3522).unwrap(),
            provenance: Provenance::ClusterCentroid,
            winning_weight: 4,
        };
        let line = resolution_record("m\"1\"", &resolved);
        let value: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(value["mention_id"], "m\"1\"");
        assert_eq!(value["status"], "resolved");
        assert_eq!(value["lat"], 48.8566);
        assert_eq!(value["provenance"], "cluster_centroid");
        assert_eq!(value["winning_weight"], 4);
        assert!(line.contains("\"lat\":48.856600"));

        let invalid = resolution_record("m2", &Resolution::Invalid);
        let value: serde_json::Value = serde_json::from_str(&invalid).unwrap();
        assert_eq!(value["status"], "invalid");
        assert!(value.get("lat").is_none());
    }

    #[test]
    fn categories_csv_shape() {
        let rows = vec![(
            "m1".to_string(),
            "High Street".to_string(),
            PlaceCategory::TrafficWay,
        )];
        let csv = categories_to_csv(&rows);
        assert_eq!(csv, "mention_id,surface,category\nm1,High Street,traffic_way\n");
    }
}
