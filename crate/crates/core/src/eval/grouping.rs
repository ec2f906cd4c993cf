//! Correlation-based feature grouping and pooling of per-group posteriors.
//!
//! With several observation features, one model is trained per group of
//! positively correlated features and the per-group posteriors are pooled
//! log-linearly into a single state path.

use crate::dataset::SequenceDataset;
use crate::error::{Error, Result};

/// Feature partition induced by the sign of pairwise Pearson correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGroups {
    /// Connected components of the positive-correlation graph, each sorted,
    /// ordered by smallest member.
    pub groups: Vec<Vec<usize>>,
    /// Pairwise Pearson correlations over all pooled observations.
    pub correlation: Vec<Vec<f64>>,
    /// Features with (numerically) zero variance; each forms its own group.
    pub zero_variance: Vec<usize>,
}

/// Group features by positive pairwise correlation: features `i` and `j`
/// belong together iff they are connected through correlations > 0.
pub fn correlation_grouping(dataset: &SequenceDataset) -> Result<FeatureGroups> {
    let points = dataset.pooled_points()?;
    let d = points[0].len();
    let n = points.len() as f64;

    let mut mean = vec![0.0; d];
    for x in &points {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for x in &points {
        for i in 0..d {
            let zi = x[i] - mean[i];
            for j in i..d {
                cov[i][j] += zi * (x[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }

    let zero_variance: Vec<usize> = (0..d).filter(|&i| cov[i][i] <= 0.0).collect();
    let mut correlation = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            correlation[i][j] = if i == j {
                1.0
            } else if cov[i][i] > 0.0 && cov[j][j] > 0.0 {
                cov[i][j] / (cov[i][i].sqrt() * cov[j][j].sqrt())
            } else {
                0.0
            };
        }
    }

    // Connected components over edges with strictly positive correlation;
    // zero-variance features stay singletons.
    let mut component = vec![usize::MAX; d];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..d {
        if component[start] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        component[start] = id;
        while let Some(i) = stack.pop() {
            members.push(i);
            if zero_variance.contains(&i) {
                continue;
            }
            for j in 0..d {
                if component[j] == usize::MAX
                    && !zero_variance.contains(&j)
                    && correlation[i][j] > 0.0
                {
                    component[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }

    Ok(FeatureGroups {
        groups,
        correlation,
        zero_variance,
    })
}

/// Pool per-group state posteriors into one path by weighted log-linear
/// pooling: the combined per-step posterior is proportional to
/// `exp(sum_g w_g ln gamma_g)`, and the path takes the per-step argmax
/// (ties to the lowest state).
///
/// `weights` defaults to uniform; it must match the number of groups, be
/// nonnegative, and sum to 1.
pub fn combine_predictions(
    posteriors: &[Vec<Vec<f64>>],
    weights: Option<&[f64]>,
) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    if posteriors.is_empty() {
        return Err(Error::invalid("need at least one posterior matrix"));
    }
    let t_len = posteriors[0].len();
    let m = posteriors[0].first().map_or(0, Vec::len);
    if t_len == 0 || m == 0 {
        return Err(Error::invalid("posterior matrices must be nonempty"));
    }
    for p in posteriors {
        if p.len() != t_len || p.iter().any(|row| row.len() != m) {
            return Err(Error::invalid("posterior matrices disagree in shape"));
        }
    }
    let uniform = vec![1.0 / posteriors.len() as f64; posteriors.len()];
    let weights = weights.unwrap_or(&uniform);
    if weights.len() != posteriors.len() {
        return Err(Error::invalid("one weight per posterior matrix required"));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::invalid("weights must be nonnegative"));
    }
    let wsum: f64 = weights.iter().sum();
    if (wsum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("weights sum to {wsum}, expected 1")));
    }

    let mut path = Vec::with_capacity(t_len);
    let mut combined = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut log_row = vec![0.0f64; m];
        for (g, p) in posteriors.iter().enumerate() {
            if weights[g] == 0.0 {
                continue;
            }
            for i in 0..m {
                log_row[i] += weights[g] * p[t][i].ln();
            }
        }
        let max = log_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut row: Vec<f64> = if max == f64::NEG_INFINITY {
            vec![1.0 / m as f64; m]
        } else {
            log_row.iter().map(|&l| (l - max).exp()).collect()
        };
        let sum: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= sum;
        }
        let mut best = 0;
        for i in 1..m {
            if row[i] > row[best] {
                best = i;
            }
        }
        path.push(best);
        combined.push(row);
    }
    Ok((path, combined))
}
