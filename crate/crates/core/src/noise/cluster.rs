//! One-dimensional k-means and the divisive clustering built on it.

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::error::LearnError;

/// Denominator floor for the normalised standard deviation.
pub const NSTD_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    members: Vec<f64>,
    centroid: f64,
}

impl Cluster {
    /// Panics on an empty member list.
    pub fn new(mut members: Vec<f64>) -> Self {
        assert!(!members.is_empty(), "a cluster has at least one member");
        members.sort_by(f64::total_cmp);
        let centroid = members.iter().sum::<f64>() / members.len() as f64;
        Cluster { members, centroid }
    }

    /// Members in ascending order.
    pub fn members(&self) -> &[f64] {
        &self.members
    }

    pub fn centroid(&self) -> f64 {
        self.centroid
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.members.binary_search_by(|m| m.total_cmp(&v)).is_ok()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub outliers: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iter: 100,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityWeights {
    pub alpha: f64,
    pub beta: f64,
    pub acceptance: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        QualityWeights {
            alpha: 0.6,
            beta: 0.4,
            acceptance: 0.05,
        }
    }
}

fn nearest(v: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    for (j, c) in centroids.iter().enumerate().skip(1) {
        if (v - c).abs() < (v - centroids[best]).abs() {
            best = j;
        }
    }
    best
}

fn wcss(points: &[f64], assign: &[usize], centroids: &[f64]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &a)| (p - centroids[a]).powi(2))
        .sum()
}

fn recompute(points: &[f64], assign: &[usize], k: usize) -> (Vec<f64>, Vec<usize>) {
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assign) {
        sums[a] += p;
        counts[a] += 1;
    }
    let centroids = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| if n == 0 { f64::NAN } else { s / n as f64 })
        .collect();
    (centroids, counts)
}

/// One Lloyd run from the given initial centroids. Returns the assignment.
fn lloyd(points: &[f64], mut centroids: Vec<f64>, max_iter: usize) -> (Vec<usize>, Vec<f64>) {
    let k = centroids.len();
    let mut assign: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
    for _ in 0..max_iter {
        let (mut fresh, mut counts) = recompute(points, &assign, k);
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            // Reseed an empty cluster with the point farthest from its centroid,
            // never emptying the donor.
            let far = (0..points.len())
                .filter(|&i| counts[assign[i]] > 1)
                .max_by(|&a, &b| {
                    let da = (points[a] - fresh[assign[a]]).abs();
                    let db = (points[b] - fresh[assign[b]]).abs();
                    da.total_cmp(&db).then(b.cmp(&a))
                });
            if let Some(i) = far {
                counts[assign[i]] -= 1;
                counts[j] += 1;
                assign[i] = j;
                (fresh, _) = recompute(points, &assign, k);
            }
        }
        centroids = fresh;
        let next: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    let (centroids, _) = recompute(points, &assign, k);
    (assign, centroids)
}

/// Lloyd's k-means on reals. Initial centroids are `k` distinct input values
/// chosen uniformly at random; the run with the lowest within-cluster sum of
/// squares among `cfg.restarts` is kept. Clusters left empty (possible only
/// when the input has fewer than `k` distinct values) are omitted.
pub fn kmeans<R: Rng>(
    points: &[f64],
    k: usize,
    cfg: &KMeansConfig,
    rng: &mut R,
) -> Result<Vec<Cluster>, LearnError> {
    if k == 0 || k > points.len() {
        return Err(LearnError::InsufficientPoints { k, n: points.len() });
    }
    let mut distinct: Vec<f64> = points.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for _ in 0..cfg.restarts.max(1) {
        let init: Vec<f64> = if distinct.len() <= k {
            let mut c = distinct.clone();
            c.resize(k, distinct[0]);
            c
        } else {
            let mut idx = sample(rng, distinct.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| distinct[i]).collect()
        };
        let (assign, centroids) = lloyd(points, init, cfg.max_iter);
        let score = wcss(
            points,
            &assign,
            &centroids
                .iter()
                .map(|c| if c.is_nan() { 0.0 } else { *c })
                .collect::<Vec<_>>(),
        );
        if best.as_ref().map_or(true, |(b, _, _)| score < *b) {
            best = Some((score, assign, centroids));
        }
        if distinct.len() <= k {
            break;
        }
    }
    let (_, assign, _) = best.expect("at least one restart");
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (p, a) in points.iter().zip(assign) {
        groups[a].push(*p);
    }
    let mut clusters: Vec<Cluster> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(Cluster::new)
        .collect();
    clusters.sort_by(|a, b| a.centroid.total_cmp(&b.centroid));
    Ok(clusters)
}

/// Prefix sums over a sorted member list for O(log n) distance sums.
struct DistanceIndex<'a> {
    sorted: &'a [f64],
    prefix: Vec<f64>,
}

impl<'a> DistanceIndex<'a> {
    fn new(sorted: &'a [f64]) -> Self {
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in sorted {
            acc += v;
            prefix.push(acc);
        }
        DistanceIndex { sorted, prefix }
    }

    /// Sum of |x - m| over all members m.
    fn total_distance(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|m| *m < x);
        let n = self.sorted.len();
        let sum_below = self.prefix[below];
        let sum_above = self.prefix[n] - sum_below;
        (x * below as f64 - sum_below) + (sum_above - x * (n - below) as f64)
    }
}

fn point_silhouette(
    x: f64,
    own: &DistanceIndex,
    own_len: usize,
    others: &[(DistanceIndex, usize)],
) -> f64 {
    if own_len <= 1 || others.is_empty() {
        return 0.0;
    }
    let a = own.total_distance(x) / (own_len - 1) as f64;
    let b = others
        .iter()
        .map(|(idx, n)| idx.total_distance(x) / *n as f64)
        .fold(f64::INFINITY, f64::min);
    let denom = a.max(b);
    if denom == 0.0 {
        0.0
    } else {
        (b - a) / denom
    }
}

/// Silhouette of value `x`, a member of `clusters[own]`.
pub fn silhouette(x: f64, own: usize, clusters: &[Cluster]) -> f64 {
    let idx = DistanceIndex::new(&clusters[own].members);
    let others: Vec<(DistanceIndex, usize)> = clusters
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != own)
        .map(|(_, c)| (DistanceIndex::new(&c.members), c.len()))
        .collect();
    point_silhouette(x, &idx, clusters[own].len(), &others)
}

/// Mean silhouette over the members of `clusters[own]`.
pub fn cluster_silhouette(own: usize, clusters: &[Cluster]) -> f64 {
    let c = &clusters[own];
    let idx = DistanceIndex::new(&c.members);
    let others: Vec<(DistanceIndex, usize)> = clusters
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != own)
        .map(|(_, c)| (DistanceIndex::new(&c.members), c.len()))
        .collect();
    c.members
        .iter()
        .map(|&x| point_silhouette(x, &idx, c.len(), &others))
        .sum::<f64>()
        / c.len() as f64
}

/// Population standard deviation over |centroid|, floored at `NSTD_EPSILON`.
pub fn nstd(c: &Cluster) -> f64 {
    let mu = c.centroid;
    let var = c.members.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / c.len() as f64;
    var.sqrt() / mu.abs().max(NSTD_EPSILON)
}

/// Weighted cluster quality; zero is best.
pub fn quality(own: usize, clusters: &[Cluster], w: &QualityWeights) -> f64 {
    w.alpha * (1.0 - cluster_silhouette(own, clusters)) + w.beta * nstd(&clusters[own])
}

/// Divisive hierarchical clustering: halve with k-means until every part
/// meets the acceptance criterion; single values become outliers.
pub fn divisive_cluster<R: Rng>(
    values: &[f64],
    w: &QualityWeights,
    km: &KMeansConfig,
    rng: &mut R,
) -> ClusterSet {
    let mut out = ClusterSet::default();
    match values.len() {
        0 => {}
        1 => out.outliers.push(values[0]),
        _ => {
            let whole = [Cluster::new(values.to_vec())];
            if quality(0, &whole, w) <= w.acceptance {
                out.clusters.push(whole.into_iter().next().unwrap());
            } else {
                split(values, w, km, rng, &mut out);
            }
        }
    }
    out.clusters
        .sort_by(|a, b| a.centroid.total_cmp(&b.centroid));
    out.outliers.sort_by(f64::total_cmp);
    out
}

fn split<R: Rng>(
    values: &[f64],
    w: &QualityWeights,
    km: &KMeansConfig,
    rng: &mut R,
    out: &mut ClusterSet,
) {
    if values.len() == 1 {
        out.outliers.push(values[0]);
        return;
    }
    let parts = kmeans(values, 2, km, rng).expect("two or more values");
    if parts.len() < 2 {
        out.clusters.push(Cluster::new(values.to_vec()));
        return;
    }
    for i in 0..parts.len() {
        if quality(i, &parts, w) <= w.acceptance {
            if parts[i].len() > 1 {
                out.clusters.push(parts[i].clone());
            } else {
                out.outliers.push(parts[i].members[0]);
            }
        } else {
            split(&parts[i].members, w, km, rng, out);
        }
    }
}
