//! Clustering of embedding rows and evaluation against planted labels.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::tensor::FactorMatrix;

/// Label given to DBSCAN noise points.
pub const NOISE: i32 = -1;

/// Whether the clustered rows are nodes (`n`) or networks/layers (`N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemKind {
    Node,
    Network,
}

impl ItemKind {
    pub fn tag(self) -> char {
        match self {
            ItemKind::Node => 'n',
            ItemKind::Network => 'N',
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "n" => Ok(ItemKind::Node),
            "N" => Ok(ItemKind::Network),
            other => Err(Error::arg(format!("item type must be 'n' or 'N', got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<i32>,
    pub k: usize,
    pub kind: ItemKind,
}

impl ClusterAssignment {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// L2-normalize rows before clustering.
    pub normalize: bool,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions {
            restarts: 20,
            max_iter: 300,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub objective: f64,
    /// Objective after every Lloyd assignment step of the winning restart.
    pub objective_trace: Vec<f64>,
    pub restart: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn normalize_rows(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                p.iter().map(|v| v / norm).collect()
            } else {
                p.clone()
            }
        })
        .collect()
}

fn plus_plus_seeds(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut objective = 0.0;
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_dist(p, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        *label = best;
        objective += best_d;
    }
    objective
}

fn lloyd(points: &[Vec<f64>], k: usize, max_iter: usize, rng: &mut impl Rng) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
    let dim = points[0].len();
    let mut centroids = plus_plus_seeds(points, k, rng);
    let mut labels = vec![0usize; points.len()];
    let mut trace = vec![assign(points, &centroids, &mut labels)];
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // empty clusters move to the point farthest from its centroid
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        let da = sq_dist(&points[a], &centroids[labels[a]]);
                        let db = sq_dist(&points[b], &centroids[labels[b]]);
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .expect("non-empty input");
                centroids[c] = points[far].clone();
                let old = labels[far];
                counts[old] -= 1;
                counts[c] += 1;
                labels[far] = c;
            }
        }
        let previous = labels.clone();
        let objective = assign(points, &centroids, &mut labels);
        trace.push(objective);
        if labels == previous {
            break;
        }
    }
    (labels, centroids, trace)
}

/// Lloyd's algorithm with k-means++ seeding; best of `opts.restarts` runs,
/// ties going to the earliest restart.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, opts: &KmeansOptions) -> Result<KmeansFit> {
    if points.is_empty() {
        return Err(Error::arg("k-means needs at least one point"));
    }
    if k == 0 || k > points.len() {
        return Err(Error::arg(format!(
            "cluster count {k} outside 1..={}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::arg("all points must share one dimension"));
    }
    let owned;
    let points = if opts.normalize {
        owned = normalize_rows(points);
        &owned[..]
    } else {
        points
    };
    let restarts = opts.restarts.max(1);
    let runs: Vec<(Vec<usize>, Vec<Vec<f64>>, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            lloyd(points, k, opts.max_iter, &mut rng)
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.2.last() < runs[best].2.last() {
            best = r;
        }
    }
    let (labels, centroids, trace) = runs.into_iter().nth(best).expect("at least one restart");
    Ok(KmeansFit {
        labels,
        centroids,
        objective: *trace.last().expect("trace has the seeding step"),
        objective_trace: trace,
        restart: best,
    })
}

pub fn community_cluster_km(
    embedding: &FactorMatrix,
    kind: ItemKind,
    cluster_number: usize,
    seed: u64,
    opts: &KmeansOptions,
) -> Result<ClusterAssignment> {
    let fit = kmeans(&embedding.to_rows(), cluster_number, seed, opts)?;
    Ok(ClusterAssignment {
        labels: fit.labels.iter().map(|&l| l as i32).collect(),
        k: cluster_number,
        kind,
    })
}

/// DBSCAN with Euclidean distance. A point is core when at least `min_pts`
/// points (itself included) lie within `eps`. Border points join the cluster
/// of their lowest-index core neighbour. Clusters are numbered in order of
/// their lowest-index core point.
pub fn dbscan(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<i32> {
    let n = points.len();
    let eps2 = eps * eps;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| sq_dist(&points[i], &points[j]) <= eps2).collect())
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![NOISE; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if !core[start] || labels[start] != NOISE {
            continue;
        }
        labels[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for &q in &neighbours[p] {
                if core[q] && labels[q] == NOISE {
                    labels[q] = next;
                    stack.push(q);
                }
            }
        }
        next += 1;
    }
    for p in 0..n {
        if !core[p] {
            if let Some(&q) = neighbours[p].iter().find(|&&q| core[q]) {
                labels[p] = labels[q];
            }
        }
    }
    labels
}

pub fn community_cluster_dbscan(
    embedding: &FactorMatrix,
    kind: ItemKind,
    eps_value: f64,
    pts_value: usize,
) -> Result<ClusterAssignment> {
    if !(eps_value > 0.0) {
        return Err(Error::arg(format!("eps must be positive, got {eps_value}")));
    }
    if pts_value == 0 {
        return Err(Error::arg("min points must be at least 1"));
    }
    let labels = dbscan(&embedding.to_rows(), eps_value, pts_value);
    let k = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
    Ok(ClusterAssignment { labels, k, kind })
}

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to every row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // potentials over 1-based rows/cols with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if !used[col] {
                    let cur = cost[r0 - 1][col - 1] - u[r0] - v[col];
                    if cur < minv[col] {
                        minv[col] = cur;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for col in 1..=n {
        if owner[col] > 0 {
            assignment[owner[col] - 1] = col - 1;
        }
    }
    assignment
}

fn compact(labels: impl Iterator<Item = i64>) -> (Vec<Option<usize>>, usize) {
    let mut seen: Vec<i64> = Vec::new();
    let ids = labels
        .map(|l| {
            if l < 0 {
                return None;
            }
            Some(match seen.iter().position(|&s| s == l) {
                Some(p) => p,
                None => {
                    seen.push(l);
                    seen.len() - 1
                }
            })
        })
        .collect();
    (ids, seen.len())
}

/// Confusion counts between predicted clusters (rows) and true labels
/// (columns), padded to a square. Noise predictions are left out, so they
/// always count as mistakes.
pub fn confusion_matrix(pred: &[i32], truth: &[usize]) -> Result<Vec<Vec<f64>>> {
    if pred.len() != truth.len() {
        return Err(Error::arg(format!(
            "prediction has {} items, truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    let (p_ids, kp) = compact(pred.iter().map(|&l| l as i64));
    let (t_ids, kt) = compact(truth.iter().map(|&l| l as i64));
    let size = kp.max(kt);
    let mut counts = vec![vec![0.0; size]; size];
    for (p, t) in p_ids.iter().zip(&t_ids) {
        if let (Some(p), Some(t)) = (p, t) {
            counts[*p][*t] += 1.0;
        }
    }
    Ok(counts)
}

pub fn best_matching_hungarian(counts: &[Vec<f64>]) -> f64 {
    let big = counts.iter().flatten().copied().fold(0.0, f64::max);
    let cost: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| row.iter().map(|c| big - c).collect())
        .collect();
    hungarian(&cost)
        .iter()
        .enumerate()
        .map(|(r, &c)| counts[r][c])
        .sum()
}

pub fn best_matching_brute_force(counts: &[Vec<f64>]) -> f64 {
    fn go(counts: &[Vec<f64>], row: usize, used: &mut [bool]) -> f64 {
        if row == counts.len() {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for c in 0..counts.len() {
            if !used[c] {
                used[c] = true;
                best = best.max(counts[row][c] + go(counts, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(counts, 0, &mut vec![false; counts.len()])
}

/// Fraction of items mislabeled under the best one-to-one relabeling of `pred`.
pub fn misclustering_rate(pred: &[i32], truth: &[usize]) -> Result<f64> {
    let counts = confusion_matrix(pred, truth)?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let matched = if counts.len() <= 5 {
        best_matching_brute_force(&counts)
    } else {
        best_matching_hungarian(&counts)
    };
    Ok(1.0 - matched / pred.len() as f64)
}
