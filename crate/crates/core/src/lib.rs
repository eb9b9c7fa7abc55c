//! Toponym disambiguation by spatial-clustering vote.
//!
//! Several external systems (entity linkers, geocoders, rule-based resolvers)
//! each estimate coordinates for a toponym mention; this crate combines those
//! estimates by clustering them with weighted DBSCAN, taking the spherical
//! centroid of the heaviest cluster, and falling back to the first valid
//! estimate when no cluster forms. Around that sit the pieces needed to
//! evaluate such ensembles end to end: gold-corpus ingestion, a GeoNames
//! gazetteer with a largest-population baseline and place categorization,
//! Accuracy/Mean-Error/AUC metrics, and ablation and parameter-sweep
//! analyses.

pub mod analysis;
pub mod clustering;
pub mod corpus;
pub mod gazetteer;
pub mod geodesy;
pub mod metrics;
pub mod predictions;
pub mod report;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
pub mod voting;

pub use clustering::{Cluster, ClusterParams, WeightedEstimate};
pub use corpus::{Corpus, Mention};
pub use geodesy::{haversine_km,spherical_centroid, DistanceKm, GeoPoint, MAX_ERROR_KM};
pub use metrics::{EvalOptions, MetricsReport};
pub use predictions::{Prediction, PredictionSet};
pub use voting::{EnsembleConfig, Resolution};
