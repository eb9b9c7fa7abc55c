//! Reference implementations and generators backing the test suites.
//!
//! Everything here is deliberately written from scratch, next to rather than
//! on top of the production code paths it checks: the DBSCAN reference
//! materializes weight-many replicas and runs the textbook algorithm on them,
//! and the metric oracle recomputes every statistic with compensated
//! summation. Only compiled for tests or with the `testkit` feature.

use std::collections::BTreeSet;

use rand::Rng;

use crate::clustering::{Cluster, ClusterParams, WeightedEstimate};
use crate::geodesy::{haversine_km, GeoPoint, MAX_ERROR_KM};

/// Cluster partition as comparable sets of approach ids.
pub type Partition = BTreeSet<BTreeSet<String>>;

/// Projects `dbscan_weighted` output onto the comparable partition form.
pub fn weighted_partition(clusters: &[Cluster]) -> Partition {
    clusters
        .iter()
        .map(|c| {
            c.members
                .iter()
                .map(|m| m.approach_id.clone())
                .collect::<BTreeSet<_>>()
        })
        .collect()
}

/// Textbook DBSCAN on the explicitly replicated point multiset.
///
/// Each estimate of weight `w` becomes `w` literal copies, in input order.
/// Neighborhoods are `distance ≤ eps` including the point itself; a point is
/// core when its neighborhood holds at least `min_pts` points. Returns the
/// clusters as sets of the originating approach ids.
///
/// Panics if replicas of one estimate end up in different clusters, which
/// would mean the replication semantics themselves are broken.
pub fn reference_partition(estimates: &[WeightedEstimate], params: &ClusterParams) -> Partition {
    struct Replica {
        origin: usize,
        point: GeoPoint,
    }
    let mut replicas = Vec::new();
    for (origin, est) in estimates.iter().enumerate() {
        for _ in 0..est.weight {
            replicas.push(Replica {
                origin,
                point: est.point,
            });
        }
    }
    let n = replicas.len();
    let region_query = |p: usize| -> Vec<usize> {
        (0..n)
            .filter(|&q| haversine_km(replicas[p].point, replicas[q].point).km() <= params.eps_km())
            .collect()
    };

    const UNCLASSIFIED: i64 = -2;
    const NOISE: i64 = -1;
    let mut label = vec![UNCLASSIFIED; n];
    let mut visited = vec![false; n];
    let mut next_cluster: i64 = 0;

    for p in 0..n {
        if visited[p] {
            continue;
        }
        visited[p] = true;
        let seeds = region_query(p);
        if (seeds.len() as u32) < params.min_pts() {
            label[p] = NOISE;
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        label[p] = cluster;
        let mut seeds = seeds;
        let mut i = 0;
        while i < seeds.len() {
            let q = seeds[i];
            i += 1;
            if !visited[q] {
                visited[q] = true;
                let q_neighbors = region_query(q);
                if (q_neighbors.len() as u32) >= params.min_pts() {
                    seeds.extend(q_neighbors);
                }
            }
            if label[q] == UNCLASSIFIED || label[q] == NOISE {
                label[q] = cluster;
            }
        }
    }

    let mut per_origin: Vec<Option<i64>> = vec![None; estimates.len()];
    for (i, r) in replicas.iter().enumerate() {
        match per_origin[r.origin] {
            None => per_origin[r.origin] = Some(label[i]),
            Some(prev) => assert_eq!(
                prev, label[i],
                "replicas of estimate {} split across clusters",
                r.origin
            ),
        }
    }

    let mut partition: Partition = BTreeSet::new();
    for cluster in 0..next_cluster {
        let ids: BTreeSet<String> = estimates
            .iter()
            .enumerate()
            .filter(|(i, _)| per_origin[*i] == Some(cluster))
            .map(|(_, e)| e.approach_id.clone())
            .collect();
        if !ids.is_empty() {
            partition.insert(ids);
        }
    }
    partition
}

/// True when some non-core estimate is within eps of core points belonging to
/// two different core-connected components; only then can input order affect
/// the partition.
pub fn has_shared_border(estimates: &[WeightedEstimate], params: &ClusterParams) -> bool {
    let n = estimates.len();
    let mut within = vec![Vec::new(); n];
    let mut core = vec![false; n];
    for i in 0..n {
        let mut weight = 0u64;
        for j in 0..n {
            if haversine_km(estimates[i].point, estimates[j].point).km() <= params.eps_km() {
                within[i].push(j);
                weight += u64::from(estimates[j].weight);
            }
        }
        core[i] = weight >= u64::from(params.min_pts());
    }
    // Union-find over core points only.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..n {
        if !core[i] {
            continue;
        }
        for &j in &within[i] {
            if core[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        let components: BTreeSet<usize> = within[i]
            .iter()
            .copied()
            .filter(|&j| core[j])
            .map(|j| find(&mut parent, j))
            .collect();
        if components.len() >= 2 {
            return true;
        }
    }
    false
}

/// Random clustering instance: up to `max_estimates` points scattered around
/// a few anchors at jitter scales comparable to eps, so instances exercise
/// merged clusters, borders, and noise.
pub fn arb_instance<R: Rng>(
    rng: &mut R,
    max_estimates: usize,
    max_weight: u32,
) -> (Vec<WeightedEstimate>, ClusterParams) {
    let eps_km = *[5.0, 10.0, 50.0].get(rng.random_range(0..3)).unwrap();
    let min_pts = rng.random_range(1..=3);
    let params = ClusterParams::new(eps_km, min_pts).unwrap();

    let n = rng.random_range(1..=max_estimates);
    let anchor_count = rng.random_range(1..=3usize);
    let anchors: Vec<GeoPoint> = (0..anchor_count)
        .map(|_| {
            GeoPoint::new(
                rng.random_range(-60.0..60.0),
                rng.random_range(-170.0..170.0),
            )
            .unwrap()
        })
        .collect();

    let estimates = (0..n)
        .map(|i| {
            let anchor = anchors[rng.random_range(0..anchors.len())];
            let dist_km = rng.random_range(0.0..eps_km * 3.0);
            let bearing: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let dlat = dist_km / 111.19 * bearing.cos();
            let dlon = dist_km / (111.19 * anchor.lat().to_radians().cos().max(0.2))
                * bearing.sin();
            WeightedEstimate {
                approach_id: format!("a{i}"),
                point: GeoPoint::new((anchor.lat() + dlat).clamp(-90.0, 90.0), anchor.lon() + dlon)
                    .unwrap(),
                weight: rng.random_range(1..=max_weight),
            }
        })
        .collect();
    (estimates, params)
}

/// Random error vector mixing exact endpoints with uniform draws.
pub fn arb_error_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| match rng.random_range(0..10) {
            0 => 0.0,
            1 => MAX_ERROR_KM,
            _ => rng.random_range(0.0..MAX_ERROR_KM),
        })
        .collect()
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Fraction of errors strictly below the threshold.
pub fn oracle_accuracy(errors: &[f64], threshold_km: f64) -> f64 {
    let hits = errors.iter().filter(|&&x| x < threshold_km).count();
    hits as f64 / errors.len() as f64
}

/// Arithmetic mean with compensated summation.
pub fn oracle_mean_error(errors: &[f64]) -> f64 {
    kahan_sum(errors.iter().copied()) / errors.len() as f64
}

/// Mean of `ln(x + 1) / ln(20039)` with compensated summation.
pub fn oracle_auc_mean(errors: &[f64]) -> f64 {
    let denom = MAX_ERROR_KM.ln();
    kahan_sum(errors.iter().map(|&x| (x + 1.0).ln() / denom)) / errors.len() as f64
}

/// Trapezoidal area under the ascending-sorted normalized-log curve with the
/// index axis rescaled to `[0, 1]`.
pub fn oracle_auc_trapezoid(errors: &[f64]) -> f64 {
    let denom = MAX_ERROR_KM.ln();
    let mut ys: Vec<f64> = errors.iter().map(|&x| (x + 1.0).ln() / denom).collect();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if ys.len() == 1 {
        return ys[0];
    }
    let segments = (ys.len() - 1) as f64;
    kahan_sum(ys.windows(2).map(|w| (w[0] + w[1]) / 2.0)) / segments
}
