//! Mixture-order selection for continuous HMMs by BIC.

use crate::dataset::SequenceDataset;
use crate::error::{Error, Result};
use crate::hmm::{baum_welch, count_params_chmm, EmTrainConfig, EmissionKind};

/// Scores per candidate mixture order.
#[derive(Debug, Clone)]
pub struct MixtureSelection {
    pub chosen: usize,
    /// `(n_mix, final log-likelihood, bic)` per candidate.
    pub scores: Vec<(usize, f64, f64)>,
}

/// Train one unsupervised continuous HMM per candidate mixture order and
/// pick the order minimizing `BIC = -2 logL + params ln(total observations)`.
/// Ties go to the smaller order.
pub fn select_mixture_components(
    dataset: &SequenceDataset,
    num_states: usize,
    candidates: &[usize],
    config: &EmTrainConfig,
) -> Result<MixtureSelection> {
    if candidates.is_empty() {
        return Err(Error::invalid("need at least one candidate mixture order"));
    }
    if candidates.iter().any(|&c| c == 0) {
        return Err(Error::invalid("mixture orders must be at least 1"));
    }
    let dim = dataset
        .dim()
        .ok_or_else(|| Error::invalid("mixture selection requires continuous observations"))?;
    let total_obs = dataset.total_len() as f64;

    let mut scores = Vec::with_capacity(candidates.len());
    for &n_mix in candidates {
        let kind = if n_mix == 1 {
            EmissionKind::Gaussian
        } else {
            EmissionKind::GaussianMixture { components: n_mix }
        };
        let (_, history) = baum_welch(dataset, num_states, kind, config)?;
        let log_l = history.final_log_likelihood();
        let params = count_params_chmm(num_states, n_mix, dim)? as f64;
        let bic = -2.0 * log_l + params * total_obs.ln();
        scores.push((n_mix, log_l, bic));
    }

    let mut ordered = scores.clone();
    ordered.sort_by(|a, b| a.0.cmp(&b.0));
    let mut chosen = ordered[0].0;
    let mut best = ordered[0].2;
    for &(n_mix, _, bic) in &ordered[1..] {
        if bic < best {
            best = bic;
            chosen = n_mix;
        }
    }
    Ok(MixtureSelection { chosen, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{
        EmissionModel, GaussianParams, HmmModel, InitialDistribution, MixtureParams,
        TransitionMatrix,
    };

    fn quick_config(seed: u64) -> EmTrainConfig {
        EmTrainConfig {
            max_iters: 200,
            num_restarts: 4,
            rel_tol: 1e-8,
            seed,
            ..Default::default()
        }
    }

    fn dataset_from(model: &HmmModel, n: usize, t: usize, seed: u64) -> SequenceDataset {
        let mut obs = Vec::with_capacity(n);
        for i in 0..n {
            let (_, o) = model.sample(t, seed + i as u64).unwrap();
            let crate::hmm::ObsSeq::Vectors(v) = o else {
                panic!()
            };
            obs.push(v);
        }
        SequenceDataset::continuous(obs).unwrap()
    }

    #[test]
    fn single_candidate_is_chosen() {
        let model = HmmModel::new(
            TransitionMatrix::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap(),
            InitialDistribution::new(vec![0.5, 0.5]).unwrap(),
            EmissionModel::gaussian(vec![
                GaussianParams::new(vec![0.0], vec![1.0]).unwrap(),
                GaussianParams::new(vec![8.0], vec![1.0]).unwrap(),
            ])
            .unwrap(),
        )
        .unwrap();
        let data = dataset_from(&model, 10, 20, 1);
        let sel = select_mixture_components(&data, 2, &[1], &quick_config(3)).unwrap();
        assert_eq!(sel.chosen, 1);
    }

    #[test]
    fn single_gaussian_data_prefers_one_component() {
        let model = HmmModel::new(
            TransitionMatrix::new(vec![vec![0.85, 0.15], vec![0.2, 0.8]]).unwrap(),
            InitialDistribution::new(vec![0.5, 0.5]).unwrap(),
            EmissionModel::gaussian(vec![
                GaussianParams::new(vec![0.0], vec![1.0]).unwrap(),
                GaussianParams::new(vec![10.0], vec![1.0]).unwrap(),
            ])
            .unwrap(),
        )
        .unwrap();
        let data = dataset_from(&model, 30, 25, 7);
        let sel = select_mixture_components(&data, 2, &[1, 2, 3], &quick_config(5)).unwrap();
        assert_eq!(sel.chosen, 1, "scores: {:?}", sel.scores);
    }

    #[test]
    fn bimodal_emissions_prefer_two_components() {
        // Per-state emissions are far-separated two-component mixtures.
        let mix = |a: f64, b: f64| {
            MixtureParams::new(
                vec![0.5, 0.5],
                vec![
                    GaussianParams::new(vec![a], vec![1.0]).unwrap(),
                    GaussianParams::new(vec![b], vec![1.0]).unwrap(),
                ],
            )
            .unwrap()
        };
        let model = HmmModel::new(
            TransitionMatrix::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap(),
            InitialDistribution::new(vec![0.5, 0.5]).unwrap(),
            EmissionModel::gaussian_mixture(vec![mix(0.0, 14.0), mix(40.0, 54.0)]).unwrap(),
        )
        .unwrap();
        let data = dataset_from(&model, 40, 25, 11);
        let sel = select_mixture_components(&data, 2, &[1, 2], &quick_config(9)).unwrap();
        assert_eq!(sel.chosen, 2, "scores: {:?}", sel.scores);
    }

    #[test]
    fn rejects_symbolic_data_and_bad_candidates() {
        let sym = SequenceDataset::symbolic(vec![vec![0, 1, 0]], 2).unwrap();
        assert!(select_mixture_components(&sym, 2, &[1], &quick_config(0)).is_err());
        let model = HmmModel::new(
            TransitionMatrix::new(vec![vec![1.0]]).unwrap(),
            InitialDistribution::new(vec![1.0]).unwrap(),
            EmissionModel::gaussian(vec![GaussianParams::new(vec![0.0], vec![1.0]).unwrap()])
                .unwrap(),
        )
        .unwrap();
        let data = dataset_from(&model, 2, 5, 0);
        assert!(select_mixture_components(&data, 1, &[], &quick_config(0)).is_err());
        assert!(select_mixture_components(&data, 1, &[0], &quick_config(0)).is_err());
    }
}
