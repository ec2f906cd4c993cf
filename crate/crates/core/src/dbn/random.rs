//! Randomized conditional distributions for a template.

use rand_distr::{Distribution, StandardNormal};

use super::{CpdSet, DbnSpec, DiscreteCpd, GaussianCpd, GaussianCpdRow, NodeId};
use crate::error::Result;
use crate::rng::{sample_dirichlet_flat, seeded};

/// Generate a full CPD set for `spec`, deterministically from `seed`.
///
/// Discrete rows are drawn from the flat Dirichlet. Observation Gaussians
/// have unit variance and means placed `separation` standard deviations
/// apart per state value: a node whose parents include the state at value
/// `s` gets base mean `s * separation` (averaged over lags when the state
/// parent appears at several), plus a per-configuration jitter proportional
/// to `separation`. Odd-indexed observation nodes run in the opposite
/// direction, which makes multiple observations anti-correlated across
/// states. With `separation` 0 all configurations coincide.
pub fn random_cpds(spec: &DbnSpec, seed: u64, separation: f64) -> Result<CpdSet> {
    if !(separation >= 0.0) {
        return Err(crate::error::Error::invalid(
            "separation must be nonnegative",
        ));
    }
    spec.validate()?;
    let mut rng = seeded(seed);

    let state = DiscreteCpd {
        table: (0..spec.config_count(NodeId::State)?)
            .map(|_| sample_dirichlet_flat(&mut rng, spec.state_cardinality))
            .collect(),
    };

    let mut inputs = Vec::with_capacity(spec.num_inputs());
    for i in 0..spec.num_inputs() {
        let node = NodeId::Input(i);
        inputs.push(DiscreteCpd {
            table: (0..spec.config_count(node)?)
                .map(|_| sample_dirichlet_flat(&mut rng, spec.input_cardinalities[i]))
                .collect(),
        });
    }

    let mut obs = Vec::with_capacity(spec.obs_dims.len());
    for j in 0..spec.obs_dims.len() {
        let node = NodeId::Obs(j);
        let parents = spec.parents(node);
        let dim = spec.obs_dims[j];
        let direction = if j % 2 == 0 { 1.0 } else { -1.0 };

        // Enumerate configurations in mixed-radix order.
        let cards: Vec<usize> = parents
            .iter()
            .map(|&(p, _)| spec.cardinality(p))
            .collect::<Result<_>>()?;
        let configs: usize = cards.iter().product::<usize>().max(1);

        let mut table = Vec::with_capacity(configs);
        for c in 0..configs {
            let mut values = vec![0usize; parents.len()];
            let mut rem = c;
            for k in (0..parents.len()).rev() {
                values[k] = rem % cards[k];
                rem /= cards[k];
            }
            // Effective state level: mean over state-node parents (one for
            // most topologies, two when both lag-0 and lag-1 state edges
            // exist).
            let state_values: Vec<usize> = parents
                .iter()
                .zip(&values)
                .filter(|((p, _), _)| *p == NodeId::State)
                .map(|(_, &v)| v)
                .collect();
            let level = if state_values.is_empty() {
                0.0
            } else {
                state_values.iter().sum::<usize>() as f64 / state_values.len() as f64
            };
            let base = direction * level * separation;
            let mean = (0..dim)
                .map(|_| {
                    let jitter: f64 = StandardNormal.sample(&mut rng);
                    base + 0.1 * separation * jitter
                })
                .collect();
            table.push(GaussianCpdRow {
                mean,
                var: vec![1.0; dim],
            });
        }
        obs.push(GaussianCpd { table });
    }

    Ok(CpdSet { state, inputs, obs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbn::{build_case_spec, CaseId, CaseOverrides};

    #[test]
    fn fixed_seed_is_reproducible() {
        let spec = build_case_spec(CaseId::Ii, &CaseOverrides::default()).unwrap();
        let a = random_cpds(&spec, 9, 4.0).unwrap();
        let b = random_cpds(&spec, 9, 4.0).unwrap();
        assert_eq!(a, b);
        let c = random_cpds(&spec, 10, 4.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_separation_collapses_all_means() {
        let spec = build_case_spec(CaseId::I, &CaseOverrides::default()).unwrap();
        let cpds = random_cpds(&spec, 3, 0.0).unwrap();
        for node in &cpds.obs {
            for row in &node.table {
                assert!(row.mean.iter().all(|&m| m == 0.0));
            }
        }
    }

    #[test]
    fn generated_tables_validate() {
        for case in [CaseId::I, CaseId::Ii, CaseId::Iii, CaseId::Iv] {
            let mut spec = build_case_spec(case, &CaseOverrides::default()).unwrap();
            spec.cpds = Some(random_cpds(&spec, 1, 4.0).unwrap());
            spec.validate().unwrap();
        }
    }

    #[test]
    fn opposite_directions_for_adjacent_obs_nodes() {
        let spec = build_case_spec(CaseId::I, &CaseOverrides::default()).unwrap();
        let cpds = random_cpds(&spec, 2, 6.0).unwrap();
        // State is the only parent of each observation: row index = state.
        let top = spec.state_cardinality - 1;
        assert!(cpds.obs[0].table[top].mean[0] > cpds.obs[0].table[0].mean[0]);
        assert!(cpds.obs[1].table[top].mean[0] < cpds.obs[1].table[0].mean[0]);
    }
}
