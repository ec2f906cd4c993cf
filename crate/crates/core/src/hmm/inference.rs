//! Scaled forward/backward recursions, smoothed posteriors, and Viterbi.

use super::{normalize_row, HmmModel, SeqView};
use crate::error::{Error, Result};

/// Output of the scaled forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// `alpha[t][i]` = P(state `i` at `t` | observations up to `t`). Rows sum to 1.
    pub alpha: Vec<Vec<f64>>,
    /// Per-step normalizers; `scaling[t]` = P(o_t | o_1..t-1).
    pub scaling: Vec<f64>,
    /// Natural log of P(observations | model) = sum of log scaling factors.
    pub log_likelihood: f64,
}

/// Bundled forward/backward quantities for one sequence.
#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub log_likelihood: f64,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub scaling: Vec<f64>,
    /// `gamma[t][i]` = P(state `i` at `t` | all observations). Rows sum to 1.
    pub gamma: Vec<Vec<f64>>,
}

impl HmmModel {
    /// Scaled forward pass over one observation sequence.
    pub fn forward<'a>(&self, seq: impl Into<SeqView<'a>>) -> Result<Forward> {
        let seq = seq.into();
        self.check_seq(seq)?;
        let len = seq.len();
        let m = self.num_states();

        let mut alpha = vec![vec![0.0; m]; len];
        let mut scaling = vec![0.0; len];

        for t in 0..len {
            let likes = self.emission().likelihood_row(seq, t)?;
            if t == 0 {
                for i in 0..m {
                    alpha[0][i] = self.initial().prob(i) * likes[i];
                }
            } else {
                for j in 0..m {
                    let mut acc = 0.0;
                    for i in 0..m {
                        acc += alpha[t - 1][i] * self.transitions().prob(i, j);
                    }
                    alpha[t][j] = acc * likes[j];
                }
            }
            let norm: f64 = alpha[t].iter().sum();
            if norm <= 0.0 || !norm.is_finite() {
                return Err(Error::Underflow { step: t });
            }
            scaling[t] = norm;
            for v in alpha[t].iter_mut() {
                *v /= norm;
            }
        }

        let log_likelihood = scaling.iter().map(|c| c.ln()).sum();
        Ok(Forward {
            alpha,
            scaling,
            log_likelihood,
        })
    }

    /// Scaled backward pass, using the normalizers produced by [`HmmModel::forward`]
    /// on the same sequence. With this scaling, `alpha[t][i] * beta[t][i]`
    /// is proportional to the smoothed posterior P(state i at t | all obs).
    pub fn backward<'a>(
        &self,
        seq: impl Into<SeqView<'a>>,
        scaling: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        let seq = seq.into();
        self.check_seq(seq)?;
        let len = seq.len();
        if scaling.len() != len {
            return Err(Error::invalid(format!(
                "scaling vector length {} does not match sequence length {len}",
                scaling.len()
            )));
        }
        let m = self.num_states();

        let mut beta = vec![vec![0.0; m]; len];
        beta[len - 1].iter_mut().for_each(|v| *v = 1.0);

        for t in (0..len - 1).rev() {
            let next_likes = self.emission().likelihood_row(seq, t + 1)?;
            let c = scaling[t + 1];
            if c <= 0.0 || !c.is_finite() {
                return Err(Error::Underflow { step: t + 1 });
            }
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += self.transitions().prob(i, j) * next_likes[j] * beta[t + 1][j];
                }
                beta[t][i] = acc / c;
            }
        }
        Ok(beta)
    }

    /// Smoothed state posteriors `gamma[t][i]` = P(state i at t | all obs).
    pub fn posterior_marginals<'a>(&self, seq: impl Into<SeqView<'a>>) -> Result<Vec<Vec<f64>>> {
        Ok(self.infer(seq)?.gamma)
    }

    /// Forward, backward, and posteriors in one call.
    pub fn infer<'a>(&self, seq: impl Into<SeqView<'a>>) -> Result<InferenceResult> {
        let seq = seq.into();
        let fwd = self.forward(seq)?;
        let beta = self.backward(seq, &fwd.scaling)?;
        let mut gamma = Vec::with_capacity(fwd.alpha.len());
        for (a_row, b_row) in fwd.alpha.iter().zip(&beta) {
            let mut row: Vec<f64> = a_row.iter().zip(b_row).map(|(a, b)| a * b).collect();
            normalize_row(&mut row);
            gamma.push(row);
        }
        Ok(InferenceResult {
            log_likelihood: fwd.log_likelihood,
            alpha: fwd.alpha,
            beta,
            scaling: fwd.scaling,
            gamma,
        })
    }

    /// Most probable state path and its joint log probability
    /// `max_S log P(S, O | model)`, computed in log space.
    ///
    /// Ties are broken toward the lowest state index, both at the final step
    /// and at every backtracking step.
    pub fn viterbi<'a>(&self, seq: impl Into<SeqView<'a>>) -> Result<(Vec<usize>, f64)> {
        let seq = seq.into();
        self.check_seq(seq)?;
        let len = seq.len();
        let m = self.num_states();

        let mut delta = vec![vec![f64::NEG_INFINITY; m]; len];
        let mut backptr = vec![vec![0usize; m]; len];

        for t in 0..len {
            let likes = self.emission().likelihood_row(seq, t)?;
            if t == 0 {
                for i in 0..m {
                    delta[0][i] = self.initial().prob(i).ln() + likes[i].ln();
                }
            } else {
                for j in 0..m {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_i = 0;
                    for i in 0..m {
                        let v = delta[t - 1][i] + self.transitions().prob(i, j).ln();
                        if v > best {
                            best = v;
                            best_i = i;
                        }
                    }
                    delta[t][j] = best + likes[j].ln();
                    backptr[t][j] = best_i;
                }
            }
            if delta[t].iter().all(|v| *v == f64::NEG_INFINITY) {
                return Err(Error::Underflow { step: t });
            }
        }

        let mut last = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, &v) in delta[len - 1].iter().enumerate() {
            if v > best {
                best = v;
                last = i;
            }
        }

        let mut path = vec![0usize; len];
        path[len - 1] = last;
        for t in (0..len - 1).rev() {
            path[t] = backptr[t + 1][path[t + 1]];
        }
        Ok((path, best))
    }
}

#[cfg(test)]
mod tests {
    use crate::error::Error;
    use crate::hmm::{EmissionModel, HmmModel, InitialDistribution, TransitionMatrix};

    /// pi=(1,0), A=I, b=I: emits symbol 0 forever with probability 1.
    fn deterministic_chain() -> HmmModel {
        HmmModel::new(
            TransitionMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            InitialDistribution::new(vec![1.0, 0.0]).unwrap(),
            EmissionModel::discrete(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
        )
        .unwrap()
    }

    fn uniform_model(m: usize, k: usize) -> HmmModel {
        HmmModel::new(
            TransitionMatrix::new(vec![vec![1.0 / m as f64; m]; m]).unwrap(),
            InitialDistribution::new(vec![1.0 / m as f64; m]).unwrap(),
            EmissionModel::discrete(vec![vec![1.0 / k as f64; k]; m]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn forward_single_step_is_weighted_emission() {
        // P(o=0) = pi_0*b_0(0) + pi_1*b_1(0) = 0.5*1 + 0.5*0 = 0.5
        let model = HmmModel::new(
            TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
            InitialDistribution::new(vec![0.5, 0.5]).unwrap(),
            EmissionModel::discrete(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let fwd = model.forward(&vec![0usize]).unwrap();
        assert!((fwd.log_likelihood - 0.5f64.ln()).abs() < 1e-12);
        assert_eq!(fwd.scaling.len(), 1);
    }

    #[test]
    fn forward_probability_one_sequence_has_zero_log_likelihood() {
        let model = deterministic_chain();
        let fwd = model.forward(&vec![0usize, 0, 0]).unwrap();
        assert!(fwd.log_likelihood.abs() < 1e-12);
        for row in &fwd.alpha {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn forward_impossible_observation_reports_step() {
        let model = deterministic_chain();
        // Symbol 1 at step 2 is impossible from state 0 which the chain never leaves.
        let err = model.forward(&vec![0usize, 0, 1]).unwrap_err();
        match err {
            Error::Underflow { step } => assert_eq!(step, 2),
            other => panic!("expected underflow, got {other}"),
        }
    }

    #[test]
    fn backward_single_step_is_ones() {
        let model = deterministic_chain();
        let obs = vec![0usize];
        let fwd = model.forward(&obs).unwrap();
        let beta = model.backward(&obs, &fwd.scaling).unwrap();
        assert_eq!(beta, vec![vec![1.0, 1.0]]);
    }

    #[test]
    fn deterministic_chain_has_one_hot_posteriors() {
        let model = deterministic_chain();
        let gamma = model.posterior_marginals(&vec![0usize, 0, 0]).unwrap();
        for row in gamma {
            assert!((row[0] - 1.0).abs() < 1e-12);
            assert!(row[1].abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_model_has_uniform_posteriors() {
        let model = uniform_model(3, 2);
        let gamma = model.posterior_marginals(&vec![0usize, 1, 0, 1]).unwrap();
        for row in gamma {
            for p in row {
                assert!((p - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn viterbi_single_step_picks_argmax() {
        let model = HmmModel::new(
            TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
            InitialDistribution::new(vec![0.4, 0.6]).unwrap(),
            EmissionModel::discrete(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap(),
        )
        .unwrap();
        // pi_0*b_0(0) = 0.36 > pi_1*b_1(0) = 0.30
        let (path, log_joint) = model.viterbi(&vec![0usize]).unwrap();
        assert_eq!(path, vec![0]);
        assert!((log_joint - 0.36f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn viterbi_deterministic_chain() {
        let model = deterministic_chain();
        let (path, log_joint) = model.viterbi(&vec![0usize, 0, 0]).unwrap();
        assert_eq!(path, vec![0, 0, 0]);
        assert!(log_joint.abs() < 1e-12);
    }

    #[test]
    fn viterbi_ties_resolve_to_lowest_state() {
        // Fully uniform model: every path has equal probability.
        let model = uniform_model(3, 2);
        let (path, _) = model.viterbi(&vec![0usize, 1, 1, 0]).unwrap();
        assert_eq!(path, vec![0, 0, 0, 0]);
    }

    #[test]
    fn empty_sequence_rejected() {
        let model = deterministic_chain();
        assert!(model.forward(&Vec::<usize>::new()).is_err());
        assert!(model.viterbi(&Vec::<usize>::new()).is_err());
    }

    #[test]
    fn log_likelihood_equals_sum_of_log_scaling() {
        let model = uniform_model(2, 3);
        let fwd = model.forward(&vec![0usize, 2, 1, 1]).unwrap();
        let sum: f64 = fwd.scaling.iter().map(|c| c.ln()).sum();
        assert_eq!(fwd.log_likelihood, sum);
    }
}
