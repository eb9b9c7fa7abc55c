//! Weighted DBSCAN over geographic points.
//!
//! An estimate with weight `w` behaves exactly like `w` coincident copies of
//! the same point: weights are counted in the density sums instead of
//! materializing replicas, which yields the same clusters without duplicate
//! bookkeeping. Neighborhoods use great-circle distance and include the query
//! point itself (the classic DBSCAN convention), so with `min_pts = 2` any
//! estimate of weight ≥ 2 is a core point and forms a cluster on its own.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geodesy::{haversine_km, GeoPoint};

/// One approach's coordinate estimate for a mention, with its vote count.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEstimate {
    pub approach_id: String,
    pub point: GeoPoint,
    pub weight: u32,
}

/// A maximal set of density-connected estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: Vec<WeightedEstimate>,
    pub total_weight: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ClusterParamsError {
    #[error("eps_km must be positive and finite, got {0}")]
    InvalidEps(f64),
    #[error("min_pts must be at least 1, got {0}")]
    InvalidMinPts(u32),
}

/// DBSCAN parameters: neighborhood radius in km and minimum weight for a core
/// point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    eps_km: f64,
    min_pts: u32,
}

impl ClusterParams {
    pub fn new(eps_km: f64, min_pts: u32) -> Result<Self, ClusterParamsError> {
        if !eps_km.is_finite() || eps_km <= 0.0 {
            return Err(ClusterParamsError::InvalidEps(eps_km));
        }
        if min_pts < 1 {
            return Err(ClusterParamsError::InvalidMinPts(min_pts));
        }
        Ok(Self { eps_km, min_pts })
    }

    pub fn eps_km(&self) -> f64 {
        self.eps_km
    }

    pub fn min_pts(&self) -> u32 {
        self.min_pts
    }
}

/// Runs DBSCAN on the estimates, treating each as `weight` coincident points.
///
/// An estimate is a core point iff the total weight within `eps_km` of it,
/// its own weight included, reaches `min_pts`. Non-core estimates reachable
/// from a core join that core's cluster; estimates reachable from cores of
/// two clusters go to the cluster seeded earlier in input order. Everything
/// else is noise and appears in no cluster.
pub fn dbscan_weighted(estimates: &[WeightedEstimate], params: &ClusterParams) -> Vec<Cluster> {
    let n = estimates.len();
    if n == 0 {
        return Vec::new();
    }

    // Per-mention inputs are tiny (≤ ~20 estimates), so the O(n²) neighbor
    // scan is the right tool; no spatial index.
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut core = vec![false; n];
    for i in 0..n {
        let mut within = Vec::new();
        let mut weight_sum = 0u64;
        for (j, other) in estimates.iter().enumerate() {
            if haversine_km(estimates[i].point, other.point).km() <= params.eps_km {
                within.push(j);
                weight_sum += u64::from(other.weight);
            }
        }
        core[i] = weight_sum >= u64::from(params.min_pts);
        neighbors.push(within);
    }

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut cluster_count = 0;
    for seed in 0..n {
        if label[seed].is_some() || !core[seed] {
            continue;
        }
        let id = cluster_count;
        cluster_count += 1;
        label[seed] = Some(id);
        let mut queue: Vec<usize> = neighbors[seed].clone();
        let mut head = 0;
        while head < queue.len() {
            let j = queue[head];
            head += 1;
            if label[j].is_none() {
                label[j] = Some(id);
                if core[j] {
                    queue.extend_from_slice(&neighbors[j]);
                }
            }
        }
    }

    let mut clusters: Vec<Cluster> = (0..cluster_count)
        .map(|_| Cluster {
            members: Vec::new(),
            total_weight: 0,
        })
        .collect();
    for (i, est) in estimates.iter().enumerate() {
        if let Some(id) = label[i] {
            clusters[id].members.push(est.clone());
            clusters[id].total_weight += est.weight;
        }
    }
    clusters
}

/// Picks the cluster with the greatest total weight. Ties are broken
/// uniformly at random with a generator seeded by `rng_seed`, so repeated
/// runs with the same seed select the same cluster. Returns `None` for an
/// empty list.
pub fn largest_cluster(clusters: &[Cluster], rng_seed: u64) -> Option<&Cluster> {
    let max = clusters.iter().map(|c| c.total_weight).max()?;
    let tied: Vec<&Cluster> = clusters
        .iter()
        .filter(|c| c.total_weight == max)
        .collect();
    if tied.len() == 1 {
        return Some(tied[0]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Some(tied[rng.random_range(0..tied.len())])
}
