//! Cluster-count selection: silhouette scoring and the elbow criterion.

use super::kmeans::{kmeans_fit, squared_distance, KMeansConfig};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Silhouette evaluation switches to a seeded subsample above this many
/// points; the pairwise-distance pass is quadratic.
pub const SILHOUETTE_SAMPLE_CAP: usize = 2000;

/// Outcome of a cluster-count search.
#[derive(Debug, Clone)]
pub struct KSelection {
    pub chosen_k: usize,
    /// `(k, score)` pairs: SSE for the elbow search, mean silhouette for the
    /// silhouette search.
    pub curve: Vec<(usize, f64)>,
}

/// Mean silhouette coefficient of a clustering: per sample,
/// `(b - a) / max(a, b)` where `a` is the mean distance to the rest of its
/// own cluster and `b` the mean distance to the nearest other cluster.
/// Samples in singleton clusters score 0.
pub fn silhouette_score(points: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    if points.len() != assignments.len() {
        return Err(Error::invalid("points and assignments differ in length"));
    }
    if points.is_empty() {
        return Err(Error::invalid("cannot score an empty clustering"));
    }
    let mut labels: Vec<usize> = assignments.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::invalid("silhouette requires at least 2 clusters"));
    }
    let cluster_of = |a: usize| labels.binary_search(&a).unwrap();
    let sizes = {
        let mut s = vec![0usize; labels.len()];
        for &a in assignments {
            s[cluster_of(a)] += 1;
        }
        s
    };

    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let own = cluster_of(assignments[i]);
        if sizes[own] == 1 {
            continue; // scores 0
        }
        let mut sums = vec![0.0; labels.len()];
        for j in 0..n {
            if i == j {
                continue;
            }
            sums[cluster_of(assignments[j])] += squared_distance(&points[i], &points[j]).sqrt();
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..labels.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

fn fit_for_k(
    points: &[Vec<f64>],
    k: usize,
    config: &KMeansConfig,
) -> Result<super::kmeans::KMeansFit> {
    let per_k = KMeansConfig {
        k,
        // Independent seeding per candidate keeps the curve reproducible.
        seed: config.seed.wrapping_add(k as u64),
        ..config.clone()
    };
    kmeans_fit(points, &per_k)
}

/// Elbow of a fitted `(k, SSE)` curve: the interior `k` with the largest
/// second difference of `ln SSE`. Ties go to the smallest `k`.
///
/// The log is what makes the drop-off visible regardless of scale; raw SSE
/// curves from separated clusters are dominated by the first split.
pub fn elbow_of_curve(curve: &[(usize, f64)]) -> Result<usize> {
    if curve.len() < 3 {
        return Err(Error::invalid(
            "elbow selection needs at least 3 candidate k values",
        ));
    }
    let log_sse: Vec<f64> = curve.iter().map(|&(_, s)| s.max(1e-12).ln()).collect();
    let mut chosen = 1;
    let mut best = f64::NEG_INFINITY;
    for i in 1..curve.len() - 1 {
        let curvature = log_sse[i - 1] - 2.0 * log_sse[i] + log_sse[i + 1];
        if curvature > best {
            best = curvature;
            chosen = i;
        }
    }
    Ok(curve[chosen].0)
}

/// Pick a cluster count by the elbow of the SSE curve over `k_range`.
/// `config.k` is ignored.
pub fn select_k_elbow(
    points: &[Vec<f64>],
    k_range: &[usize],
    config: &KMeansConfig,
) -> Result<KSelection> {
    if k_range.len() < 3 {
        return Err(Error::invalid(
            "elbow selection needs at least 3 candidate k values",
        ));
    }
    if k_range.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("k_range must be strictly ascending"));
    }
    let mut curve = Vec::with_capacity(k_range.len());
    for &k in k_range {
        curve.push((k, fit_for_k(points, k, config)?.sse));
    }
    Ok(KSelection {
        chosen_k: elbow_of_curve(&curve)?,
        curve,
    })
}

/// Pick the cluster count with the highest mean silhouette. Ties go to the
/// smallest `k`. `config.k` is ignored.
pub fn select_k_silhouette(
    points: &[Vec<f64>],
    k_range: &[usize],
    config: &KMeansConfig,
) -> Result<KSelection> {
    if k_range.is_empty() {
        return Err(Error::invalid("k_range must be nonempty"));
    }
    if k_range.iter().any(|&k| k < 2) {
        return Err(Error::invalid("silhouette selection needs k >= 2"));
    }

    // Seeded subsample for the quadratic scoring pass on large inputs.
    let sample: Option<Vec<usize>> = (points.len() > SILHOUETTE_SAMPLE_CAP).then(|| {
        let mut rng = substream(config.seed, u64::MAX);
        let mut indices: Vec<usize> = (0..points.len()).collect();
        for i in 0..SILHOUETTE_SAMPLE_CAP {
            let j = rand::Rng::gen_range(&mut rng, i..indices.len());
            indices.swap(i, j);
        }
        indices.truncate(SILHOUETTE_SAMPLE_CAP);
        indices
    });

    let mut curve = Vec::with_capacity(k_range.len());
    let mut chosen_k = 0;
    let mut best = f64::NEG_INFINITY;
    for &k in k_range {
        let fit = fit_for_k(points, k, config)?;
        let score = match &sample {
            None => silhouette_score(points, &fit.assignments)?,
            Some(idx) => {
                let sub_points: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
                let sub_assign: Vec<usize> = idx.iter().map(|&i| fit.assignments[i]).collect();
                silhouette_score(&sub_points, &sub_assign)?
            }
        };
        curve.push((k, score));
        if score > best {
            best = score;
            chosen_k = k;
        }
    }
    Ok(KSelection { chosen_k, curve })
}
