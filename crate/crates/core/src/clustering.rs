//! K-Means partitioning of sensors and per-cluster leader election.
//!
//! Lloyd's algorithm from distance-weighted (k-means++) seeding. The leader
//! of a cluster is the member nearest its centroid, lowest sensor id on ties.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::topology::{distance, Position};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    /// Cluster count; `None` means "one cluster per AUV" (at least one).
    pub k: Option<usize>,
    pub max_iters: usize,
    /// Stop once an iteration improves the objective by less than this, m².
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: None,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

impl KMeansConfig {
    /// Effective k for a deployment with the given sensor and AUV counts.
    pub fn resolve_k(&self, sensors: usize, auvs: usize) -> usize {
        self.k.unwrap_or_else(|| auvs.clamp(1, sensors.max(1)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Cluster index per sensor id.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Position>,
    /// Leader sensor id per cluster; `None` for an empty cluster.
    pub leaders: Vec<Option<usize>>,
    /// Final within-cluster sum of squared distances, m².
    pub inertia: f64,
    /// Objective after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }

    pub fn cluster_of(&self, sensor: usize) -> Option<usize> {
        self.assignment.get(sensor).copied()
    }

    pub fn leader_of(&self, sensor: usize) -> Option<usize> {
        self.cluster_of(sensor).and_then(|c| self.leaders.get(c).copied().flatten())
    }

    pub fn is_leader(&self, sensor: usize) -> bool {
        self.leader_of(sensor) == Some(sensor)
    }

    pub fn empty_clusters(&self) -> Vec<usize> {
        (0..self.k).filter(|&c| self.members(c).next().is_none()).collect()
    }
}

/// Within-cluster sum of squared distances.
pub fn inertia(points: &[Position], assignment: &[usize], centroids: &[Position]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| {
            let d = distance(p, &centroids[c]);
            d * d
        })
        .sum()
}

fn squared(a: &Position, b: &Position) -> f64 {
    let d = distance(a, b);
    d * d
}

fn nearest_centroid(p: &Position, centroids: &[Position]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared(p, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn seed_centroids<R: Rng>(points: &[Position], k: usize, rng: &mut R) -> Vec<Position> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| squared(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 {
                    chosen = Some(i);
                    if target < *w {
                        break;
                    }
                    target -= w;
                }
            }
            chosen.expect("positive total weight has a positive entry")
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(squared(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's k-means over sensor positions.
pub fn kmeans(points: &[Position], k: usize, seed: u64, max_iters: usize, tol: f64) -> Result<ClusterModel> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::ClusterCount { k, n });
    }
    if max_iters == 0 {
        return Err(Error::config("kmeans.max_iters", "must be >= 1"));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::config("kmeans.tol", "must be >= 0"));
    }

    let mut rng = rng::substream(seed, rng::KMEANS);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignment = vec![0usize; n];
    let mut trace: Vec<f64> = Vec::new();

    for _ in 0..max_iters {
        for (a, p) in assignment.iter_mut().zip(points) {
            *a = nearest_centroid(p, &centroids);
        }
        repair_empty_clusters(points, &mut assignment, &mut centroids);

        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (p, &c) in points.iter().zip(&assignment) {
            sums[c].0 += p.x;
            sums[c].1 += p.y;
            sums[c].2 += 1;
        }
        for (c, (sx, sy, count)) in sums.into_iter().enumerate() {
            if count > 0 {
                centroids[c] = Position::new(sx / count as f64, sy / count as f64);
            }
        }

        let j = inertia(points, &assignment, &centroids);
        let prev = trace.last().copied();
        if let Some(prev) = prev {
            debug_assert!(j <= prev + 1e-9 * prev.max(1.0), "k-means objective increased: {prev} -> {j}");
        }
        trace.push(j);
        if prev.is_some_and(|prev| prev - j < tol) {
            break;
        }
    }

    let model = ClusterModel {
        k,
        inertia: *trace.last().expect("at least one iteration"),
        inertia_trace: trace,
        leaders: vec![None; k],
        assignment,
        centroids,
    };
    Ok(elect_leaders(model, points))
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty_clusters(points: &[Position], assignment: &mut [usize], centroids: &mut [Position]) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &c in assignment.iter() {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let c = assignment[i];
            if sizes[c] < 2 {
                continue;
            }
            let d = squared(p, &centroids[c]);
            if d > 0.0 && far.is_none_or(|(_, fd)| d > fd) {
                far = Some((i, d));
            }
        }
        if let Some((i, _)) = far {
            sizes[assignment[i]] -= 1;
            sizes[empty] += 1;
            assignment[i] = empty;
            centroids[empty] = points[i];
        }
    }
}

/// Picks, per non-empty cluster, the member closest to the centroid.
pub fn elect_leaders(mut model: ClusterModel, points: &[Position]) -> ClusterModel {
    let mut leaders: Vec<Option<(usize, f64)>> = vec![None; model.k];
    for (id, (p, &c)) in points.iter().zip(&model.assignment).enumerate() {
        let d = distance(p, &model.centroids[c]);
        if leaders[c].is_none_or(|(_, bd)| d < bd) {
            leaders[c] = Some((id, d));
        }
    }
    model.leaders = leaders.into_iter().map(|l| l.map(|(id, _)| id)).collect();
    model
}
