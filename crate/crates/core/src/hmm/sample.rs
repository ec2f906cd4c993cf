//! Generative sampling from a fitted model.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{EmissionModel, GaussianParams, HmmModel, ObsSeq};
use crate::error::{Error, Result};
use crate::rng::{sample_categorical, seeded};

fn sample_gaussian(rng: &mut impl Rng, params: &GaussianParams) -> Vec<f64> {
    params
        .mean
        .iter()
        .zip(&params.var)
        .map(|(&mu, &var)| Normal::new(mu, var.sqrt()).unwrap().sample(rng))
        .collect()
}

impl HmmModel {
    /// Draw a state path of length `len` and matching observations.
    /// The same seed always yields the same output.
    pub fn sample(&self, len: usize, seed: u64) -> Result<(Vec<usize>, ObsSeq)> {
        if len == 0 {
            return Err(Error::invalid("sample length must be at least 1"));
        }
        let mut rng = seeded(seed);

        let mut states = Vec::with_capacity(len);
        for t in 0..len {
            let state = if t == 0 {
                sample_categorical(&mut rng, self.initial().probs())
            } else {
                sample_categorical(&mut rng, self.transitions().row(states[t - 1]))
            };
            states.push(state);
        }

        let obs = match self.emission() {
            EmissionModel::Discrete { probs } => ObsSeq::Symbols(
                states
                    .iter()
                    .map(|&s| sample_categorical(&mut rng, &probs[s]))
                    .collect(),
            ),
            EmissionModel::Gaussian { states: params } => ObsSeq::Vectors(
                states
                    .iter()
                    .map(|&s| sample_gaussian(&mut rng, &params[s]))
                    .collect(),
            ),
            EmissionModel::GaussianMixture { states: params } => ObsSeq::Vectors(
                states
                    .iter()
                    .map(|&s| {
                        let mix = &params[s];
                        let comp = sample_categorical(&mut rng, &mix.weights);
                        sample_gaussian(&mut rng, &mix.components[comp])
                    })
                    .collect(),
            ),
        };
        Ok((states, obs))
    }
}
