//! Lloyd's k-means with k-means++ seeding and multi-restart.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::substream;

/// Settings for [`kmeans_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    pub num_restarts: usize,
    pub seed: u64,
    /// Convergence threshold on the largest centroid shift.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 1,
            max_iters: 300,
            num_restarts: 10,
            seed: 0,
            tol: 1e-6,
        }
    }
}

/// Result of one k-means fit (the best restart by SSE).
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    /// Nearest-centroid index per input point (ties go to the lowest index).
    pub assignments: Vec<usize>,
    /// Sum of squared distances of points to their assigned centroid.
    pub sse: f64,
    /// SSE after each assignment phase of the winning restart.
    pub sse_history: Vec<f64>,
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the centroid nearest to `point`; ties go to the lowest index.
pub(crate) fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn count_distinct(points: &[Vec<f64>]) -> usize {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
}

fn seed_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    let mut dist_sq: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist_sq.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in dist_sq.iter().enumerate() {
                u -= d;
                if u <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.gen_range(0..points.len())
        };
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            dist_sq[i] = dist_sq[i].min(squared_distance(p, centroids.last().unwrap()));
        }
    }
    centroids
}

/// Assign points to nearest centroids, re-seeding any empty cluster at the
/// point currently farthest from its assigned centroid.
fn assign_with_repair(points: &[Vec<f64>], centroids: &mut [Vec<f64>]) -> Vec<usize> {
    let k = centroids.len();
    loop {
        let assignments: Vec<usize> = points
            .iter()
            .map(|p| nearest_centroid(p, centroids))
            .collect();
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return assignments;
        };
        let farthest = (0..points.len())
            .max_by(|&a, &b| {
                squared_distance(&points[a], &centroids[assignments[a]])
                    .total_cmp(&squared_distance(&points[b], &centroids[assignments[b]]))
            })
            .unwrap();
        centroids[empty] = points[farthest].clone();
    }
}

fn run_once(points: &[Vec<f64>], config: &KMeansConfig, rng: &mut impl Rng) -> KMeansFit {
    let mut centroids = seed_plus_plus(points, config.k, rng);
    let dim = points[0].len();
    let mut sse_history = Vec::new();

    for _ in 0..config.max_iters {
        let assignments = assign_with_repair(points, &mut centroids);
        let sse: f64 = points
            .iter()
            .zip(&assignments)
            .map(|(p, &a)| squared_distance(p, &centroids[a]))
            .sum();
        sse_history.push(sse);

        let mut sums = vec![vec![0.0; dim]; config.k];
        let mut counts = vec![0usize; config.k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, &x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for i in 0..config.k {
            // Repair above guarantees counts[i] > 0.
            let mean: Vec<f64> = sums[i].iter().map(|s| s / counts[i] as f64).collect();
            shift = shift.max(squared_distance(&mean, &centroids[i]).sqrt());
            centroids[i] = mean;
        }
        if shift < config.tol {
            break;
        }
    }

    // Make the reported assignments consistent with the final centroids.
    let assignments = assign_with_repair(points, &mut centroids);
    let sse: f64 = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum();
    sse_history.push(sse);

    KMeansFit {
        centroids,
        assignments,
        sse,
        sse_history,
    }
}

/// Cluster `points` into `config.k` groups, returning the restart with the
/// lowest SSE (ties go to the earliest restart).
pub fn kmeans_fit(points: &[Vec<f64>], config: &KMeansConfig) -> Result<KMeansFit> {
    if config.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if config.max_iters == 0 || config.num_restarts == 0 {
        return Err(Error::invalid(
            "max_iters and num_restarts must be positive",
        ));
    }
    if points.is_empty() {
        return Err(Error::invalid("cannot cluster an empty point set"));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("points must share a nonzero dimension"));
    }
    let distinct = count_distinct(points);
    if distinct < config.k {
        return Err(Error::invalid(format!(
            "k = {} exceeds the {} distinct points",
            config.k, distinct
        )));
    }

    let mut best: Option<KMeansFit> = None;
    for restart in 0..config.num_restarts {
        let mut rng = substream(config.seed, restart as u64);
        let fit = run_once(points, config, &mut rng);
        if best.as_ref().map_or(true, |b| fit.sse < b.sse) {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}
