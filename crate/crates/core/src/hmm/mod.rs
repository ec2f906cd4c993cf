//! Hidden Markov model types and algorithms.
//!
//! A model is the triple of transition matrix, initial distribution, and
//! emission model. Emissions are either a discrete symbol table, one
//! diagonal-covariance Gaussian per state, or a Gaussian mixture per state.
//! Inference uses the scaled forward/backward recursions so that sequences
//! of arbitrary length do not underflow; Viterbi runs entirely in log space.

mod inference;
mod io;
mod params;
mod sample;
mod train;

pub use inference::{Forward, InferenceResult};
pub use io::{ModelDocument, ModelMeta};
pub use params::{count_params_chmm, count_params_dhmm};
pub use train::{
    baum_welch, fit_supervised, EmTrainConfig, EmissionKind, RestartTrace, TrainingHistory,
};

use crate::error::{Error, Result};

/// Tolerance for probability-vector row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Default lower bound applied to every emission variance.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Row-stochastic state transition matrix. Row `i` is the distribution over
/// the next state given current state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid(
                "transition matrix must have at least one state",
            ));
        }
        let m = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid(format!(
                    "transition row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            check_stochastic_row(row, &format!("transition row {i}"))?;
        }
        Ok(Self { rows })
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.rows[from][to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.rows[from]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Distribution over the state at the first time step.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution {
    probs: Vec<f64>,
}

impl InitialDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("initial distribution must be nonempty"));
        }
        check_stochastic_row(&probs, "initial distribution")?;
        Ok(Self { probs })
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Mean and diagonal covariance of one Gaussian component.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub mean: Vec<f64>,
    /// Per-dimension variances (diagonal covariance).
    pub var: Vec<f64>,
}

impl GaussianParams {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != var.len() {
            return Err(Error::invalid(format!(
                "gaussian mean/variance dimensions disagree: {} vs {}",
                mean.len(),
                var.len()
            )));
        }
        if var.iter().any(|&v| !(v >= VARIANCE_FLOOR)) {
            return Err(Error::invalid(format!(
                "gaussian variance below floor {VARIANCE_FLOOR}: {var:?}"
            )));
        }
        Ok(Self { mean, var })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Log density of `x` under the diagonal Gaussian.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        const LN_2PI: f64 = 1.8378770664093453;
        let mut acc = 0.0;
        for d in 0..self.mean.len() {
            let z = x[d] - self.mean[d];
            acc += -0.5 * (z * z / self.var[d] + self.var[d].ln() + LN_2PI);
        }
        acc
    }
}

/// Weighted Gaussian mixture attached to a single state.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub components: Vec<GaussianParams>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, components: Vec<GaussianParams>) -> Result<Self> {
        if components.is_empty() || weights.len() != components.len() {
            return Err(Error::invalid(
                "mixture weights and components must be nonempty and of equal length",
            ));
        }
        check_stochastic_row(&weights, "mixture weights")?;
        let dim = components[0].dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(Error::invalid("mixture components disagree on dimension"));
        }
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Density of `x` under the mixture.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.log_density(x).exp())
            .sum()
    }
}

/// State-conditioned observation distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum EmissionModel {
    /// `probs[i][k]` = probability of symbol `k` in state `i`.
    Discrete { probs: Vec<Vec<f64>> },
    /// One diagonal Gaussian per state.
    Gaussian { states: Vec<GaussianParams> },
    /// One Gaussian mixture per state.
    GaussianMixture { states: Vec<MixtureParams> },
}

impl EmissionModel {
    pub fn discrete(probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("discrete emission table must be nonempty"));
        }
        let k = probs[0].len();
        if k == 0 {
            return Err(Error::invalid(
                "discrete emission table needs at least one symbol",
            ));
        }
        for (i, row) in probs.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid(format!(
                    "emission row {i} has {} symbols, expected {k}",
                    row.len()
                )));
            }
            check_stochastic_row(row, &format!("emission row {i}"))?;
        }
        Ok(EmissionModel::Discrete { probs })
    }

    pub fn gaussian(states: Vec<GaussianParams>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::invalid("gaussian emission needs at least one state"));
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::invalid("gaussian states disagree on dimension"));
        }
        Ok(EmissionModel::Gaussian { states })
    }

    pub fn gaussian_mixture(states: Vec<MixtureParams>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::invalid("mixture emission needs at least one state"));
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::invalid("mixture states disagree on dimension"));
        }
        Ok(EmissionModel::GaussianMixture { states })
    }

    pub fn num_states(&self) -> usize {
        match self {
            EmissionModel::Discrete { probs } => probs.len(),
            EmissionModel::Gaussian { states } => states.len(),
            EmissionModel::GaussianMixture { states } => states.len(),
        }
    }

    /// Symbol alphabet size for discrete emissions.
    pub fn num_symbols(&self) -> Option<usize> {
        match self {
            EmissionModel::Discrete { probs } => Some(probs[0].len()),
            _ => None,
        }
    }

    /// Observation dimension for continuous emissions.
    pub fn dim(&self) -> Option<usize> {
        match self {
            EmissionModel::Discrete { .. } => None,
            EmissionModel::Gaussian { states } => Some(states[0].dim()),
            EmissionModel::GaussianMixture { states } => Some(states[0].dim()),
        }
    }

    /// Likelihood of the observation at step `t` of `seq`, for every state.
    ///
    /// Discrete models return probabilities; continuous models return
    /// densities (which may exceed 1).
    pub fn likelihood_row(&self, seq: SeqView<'_>, t: usize) -> Result<Vec<f64>> {
        match (self, seq) {
            (EmissionModel::Discrete { probs }, SeqView::Symbols(obs)) => {
                let k = probs[0].len();
                let symbol = obs[t];
                if symbol >= k {
                    return Err(Error::invalid(format!(
                        "symbol {symbol} at step {t} out of range for alphabet of {k}"
                    )));
                }
                Ok(probs.iter().map(|row| row[symbol]).collect())
            }
            (EmissionModel::Gaussian { states }, SeqView::Vectors(obs)) => {
                let x = &obs[t];
                if x.len() != states[0].dim() {
                    return Err(Error::invalid(format!(
                        "observation at step {t} has dimension {}, model expects {}",
                        x.len(),
                        states[0].dim()
                    )));
                }
                Ok(states.iter().map(|s| s.log_density(x).exp()).collect())
            }
            (EmissionModel::GaussianMixture { states }, SeqView::Vectors(obs)) => {
                let x = &obs[t];
                if x.len() != states[0].dim() {
                    return Err(Error::invalid(format!(
                        "observation at step {t} has dimension {}, model expects {}",
                        x.len(),
                        states[0].dim()
                    )));
                }
                Ok(states.iter().map(|s| s.density(x)).collect())
            }
            (EmissionModel::Discrete { .. }, SeqView::Vectors(_)) => Err(Error::invalid(
                "discrete emission model cannot score continuous observations",
            )),
            (_, SeqView::Symbols(_)) => Err(Error::invalid(
                "continuous emission model cannot score symbol observations",
            )),
        }
    }
}

/// Borrowed view of one observation sequence, either symbolic or continuous.
#[derive(Debug, Clone, Copy)]
pub enum SeqView<'a> {
    Symbols(&'a [usize]),
    Vectors(&'a [Vec<f64>]),
}

/// Owned observation sequence, as produced by generative sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum ObsSeq {
    Symbols(Vec<usize>),
    Vectors(Vec<Vec<f64>>),
}

impl ObsSeq {
    pub fn view(&self) -> SeqView<'_> {
        match self {
            ObsSeq::Symbols(s) => SeqView::Symbols(s),
            ObsSeq::Vectors(v) => SeqView::Vectors(v),
        }
    }

    pub fn len(&self) -> usize {
        self.view().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl SeqView<'_> {
    pub fn len(&self) -> usize {
        match self {
            SeqView::Symbols(s) => s.len(),
            SeqView::Vectors(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<'a> From<&'a [usize]> for SeqView<'a> {
    fn from(s: &'a [usize]) -> Self {
        SeqView::Symbols(s)
    }
}

impl<'a> From<&'a Vec<usize>> for SeqView<'a> {
    fn from(s: &'a Vec<usize>) -> Self {
        SeqView::Symbols(s)
    }
}

impl<'a> From<&'a [Vec<f64>]> for SeqView<'a> {
    fn from(v: &'a [Vec<f64>]) -> Self {
        SeqView::Vectors(v)
    }
}

impl<'a> From<&'a Vec<Vec<f64>>> for SeqView<'a> {
    fn from(v: &'a Vec<Vec<f64>>) -> Self {
        SeqView::Vectors(v)
    }
}

/// A complete hidden Markov model.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    transitions: TransitionMatrix,
    initial: InitialDistribution,
    emission: EmissionModel,
}

impl HmmModel {
    pub fn new(
        transitions: TransitionMatrix,
        initial: InitialDistribution,
        emission: EmissionModel,
    ) -> Result<Self> {
        let m = transitions.num_states();
        if initial.num_states() != m || emission.num_states() != m {
            return Err(Error::invalid(format!(
                "state counts disagree: transitions {m}, initial {}, emission {}",
                initial.num_states(),
                emission.num_states()
            )));
        }
        Ok(Self {
            transitions,
            initial,
            emission,
        })
    }

    pub fn num_states(&self) -> usize {
        self.transitions.num_states()
    }

    pub fn transitions(&self) -> &TransitionMatrix {
        &self.transitions
    }

    pub fn initial(&self) -> &InitialDistribution {
        &self.initial
    }

    pub fn emission(&self) -> &EmissionModel {
        &self.emission
    }

    /// Short tag identifying the emission family.
    pub fn kind(&self) -> &'static str {
        match self.emission {
            EmissionModel::Discrete { .. } => "dhmm",
            EmissionModel::Gaussian { .. } => "chmm-gaussian",
            EmissionModel::GaussianMixture { .. } => "chmm-gmm",
        }
    }

    fn check_seq(&self, seq: SeqView<'_>) -> Result<()> {
        if seq.is_empty() {
            return Err(Error::invalid("observation sequence is empty"));
        }
        // Surface arity mismatches before running any recursion.
        self.emission.likelihood_row(seq, 0).map(|_| ())
    }
}

fn check_stochastic_row(row: &[f64], what: &str) -> Result<()> {
    for &p in row {
        if !(0.0..=1.0 + 1e-12).contains(&p) || p.is_nan() {
            return Err(Error::invalid(format!(
                "{what} has entry {p} outside [0,1]"
            )));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::invalid(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Normalize `row` in place to sum to 1. Rows that sum to zero become uniform.
pub(crate) fn normalize_row(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        for p in row.iter_mut() {
            *p /= sum;
        }
    } else {
        let u = 1.0 / row.len() as f64;
        for p in row.iter_mut() {
            *p = u;
        }
    }
}
