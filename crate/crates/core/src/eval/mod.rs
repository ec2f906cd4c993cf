//! Evaluation protocol: accuracy scoring, state mapping for unsupervised
//! models, feature grouping with prediction pooling, mixture-order
//! selection, training-ratio sweeps, and a Markov-assumption diagnostic.

mod assignment;
mod cmi;
mod grouping;
mod mixtures;
mod sweep;

pub use cmi::{cmi_markov_check, CmiEstimate};
pub use grouping::{combine_predictions, correlation_grouping, FeatureGroups};
pub use mixtures::{select_mixture_components, MixtureSelection};
pub use sweep::{run_sweep, ModelKind, SweepConfig, SweepResult, SweepRow};

use crate::error::{Error, Result};

/// Percentage of positions where the two label sequences agree.
pub fn accuracy(true_labels: &[usize], predicted: &[usize]) -> Result<f64> {
    if true_labels.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "label sequences differ in length: {} vs {}",
            true_labels.len(),
            predicted.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::invalid("cannot score empty label sequences"));
    }
    let matches = true_labels
        .iter()
        .zip(predicted)
        .filter(|(a, b)| a == b)
        .count();
    Ok(100.0 * matches as f64 / true_labels.len() as f64)
}

/// A fitted relabeling of predicted states onto true states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMapping {
    /// `permutation[predicted] = true` label.
    pub permutation: Vec<usize>,
    /// Accuracy (%) after applying the permutation, on the fitting data.
    pub accuracy_pct: f64,
}

impl StateMapping {
    pub fn apply(&self, labels: &[usize]) -> Vec<usize> {
        labels.iter().map(|&l| self.permutation[l]).collect()
    }
}

/// Find the bijection of predicted onto true labels that maximizes accuracy,
/// by optimal assignment on the confusion matrix. Among optimal bijections
/// the lexicographically smallest permutation vector wins.
pub fn map_states(
    true_labels: &[usize],
    predicted: &[usize],
    num_states: usize,
) -> Result<StateMapping> {
    if true_labels.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "label sequences differ in length: {} vs {}",
            true_labels.len(),
            predicted.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::invalid("cannot map empty label sequences"));
    }
    if num_states == 0 {
        return Err(Error::invalid("num_states must be at least 1"));
    }
    let mut confusion = vec![vec![0i64; num_states]; num_states];
    for (&t, &p) in true_labels.iter().zip(predicted) {
        if t >= num_states || p >= num_states {
            return Err(Error::invalid(format!(
                "label out of range for {num_states} states: true {t}, predicted {p}"
            )));
        }
        confusion[p][t] += 1;
    }

    // Maximize matches == minimize negated confusion.
    let negate = |rows: &[Vec<i64>]| -> Vec<Vec<i64>> {
        rows.iter()
            .map(|r| r.iter().map(|&c| -c).collect())
            .collect()
    };
    let optimum = -assignment::min_cost_value(&negate(&confusion));

    // Fix predicted labels in ascending order to the smallest true label
    // that still allows an optimal completion; this yields the
    // lexicographically smallest optimal permutation.
    let mut permutation = vec![usize::MAX; num_states];
    let mut used = vec![false; num_states];
    let mut fixed_total = 0i64;
    for pred in 0..num_states {
        let remaining_preds: Vec<usize> = (pred + 1..num_states).collect();
        for target in 0..num_states {
            if used[target] {
                continue;
            }
            let candidate = fixed_total + confusion[pred][target];
            let rest: Vec<Vec<i64>> = remaining_preds
                .iter()
                .map(|&p| {
                    (0..num_states)
                        .filter(|&t| !used[t] && t != target)
                        .map(|t| -confusion[p][t])
                        .collect()
                })
                .collect();
            let rest_best = -assignment::min_cost_value(&rest);
            if candidate + rest_best == optimum {
                permutation[pred] = target;
                used[target] = true;
                fixed_total = candidate;
                break;
            }
        }
    }

    Ok(StateMapping {
        permutation,
        accuracy_pct: 100.0 * optimum as f64 / true_labels.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 100.0);
        assert_eq!(accuracy(&[1, 2, 3], &[0, 0, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 1, 1]).unwrap(), 75.0);
        assert!(accuracy(&[0], &[0, 1]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn aligned_labels_map_to_identity() {
        let labels = vec![0, 1, 2, 0, 1, 2, 2];
        let mapping = map_states(&labels, &labels, 3).unwrap();
        assert_eq!(mapping.permutation, vec![0, 1, 2]);
        assert_eq!(mapping.accuracy_pct, 100.0);
    }

    #[test]
    fn cyclic_shift_is_inverted() {
        let truth = vec![0, 1, 2, 0, 1, 2];
        let predicted: Vec<usize> = truth.iter().map(|&s| (s + 1) % 3).collect();
        let mapping = map_states(&truth, &predicted, 3).unwrap();
        assert_eq!(mapping.accuracy_pct, 100.0);
        assert_eq!(mapping.apply(&predicted), truth);
        // predicted label p corresponds to true label p - 1 mod 3.
        assert_eq!(mapping.permutation, vec![2, 0, 1]);
    }

    #[test]
    fn ties_pick_lexicographically_smallest_permutation() {
        // No information at all: every permutation scores the same.
        let truth = vec![0, 1];
        let predicted = vec![0, 0];
        let mapping = map_states(&truth, &predicted, 2).unwrap();
        assert_eq!(mapping.permutation, vec![0, 1]);
    }

    #[test]
    fn out_of_range_labels_rejected() {
        assert!(map_states(&[0, 3], &[0, 1], 3).is_err());
        assert!(map_states(&[0, 1], &[0, 4], 3).is_err());
    }

    #[test]
    fn matches_exhaustive_permutation_search() {
        // Deterministic pseudo-random instances, M = 3..5.
        let mut seed = 99u64;
        let mut next = |m: usize| {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 33) as usize) % m
        };
        for m in 3..=5 {
            for _ in 0..20 {
                let truth: Vec<usize> = (0..60).map(|_| next(m)).collect();
                let predicted: Vec<usize> = (0..60).map(|_| next(m)).collect();
                let mapping = map_states(&truth, &predicted, m).unwrap();

                // Exhaustive search over all m! permutations, tracking the
                // best accuracy and the lexicographically smallest argmax.
                let mut perm: Vec<usize> = (0..m).collect();
                let mut best_acc = -1.0f64;
                let mut best_perm = perm.clone();
                permute(&mut perm, 0, &mut |p: &[usize]| {
                    let mapped: Vec<usize> = predicted.iter().map(|&l| p[l]).collect();
                    let acc = accuracy(&truth, &mapped).unwrap();
                    if acc > best_acc || (acc == best_acc && p < &best_perm[..]) {
                        best_acc = acc;
                        best_perm = p.to_vec();
                    }
                });
                assert_eq!(mapping.permutation, best_perm);
                assert!((mapping.accuracy_pct - best_acc).abs() < 1e-12);
                // The optimal assignment dominates the identity mapping.
                assert!(mapping.accuracy_pct >= accuracy(&truth, &predicted).unwrap());
            }
        }
    }

    fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == perm.len() {
            visit(perm);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(perm, k + 1, visit);
            perm.swap(k, i);
        }
    }
}
