//! Parameter estimation: Baum-Welch EM with restarts, and supervised
//! maximum-likelihood fitting from labeled sequences.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    normalize_row, EmissionModel, GaussianParams, HmmModel, InitialDistribution, MixtureParams,
    SeqView, TransitionMatrix,
};
use crate::dataset::SequenceDataset;
use crate::discretize::{kmeans_fit, KMeansConfig};
use crate::error::{Error, Result};
use crate::rng::{sample_dirichlet_flat, substream};

/// Occupancy below which a state (or mixture component) is considered
/// starved and its emission parameters are re-randomized.
const OCCUPANCY_EPS: f64 = 1e-8;

/// Configuration for [`baum_welch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmTrainConfig {
    pub max_iters: usize,
    /// Stop once the relative log-likelihood improvement falls below this.
    pub rel_tol: f64,
    pub num_restarts: usize,
    pub seed: u64,
    pub variance_floor: f64,
}

impl Default for EmTrainConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            rel_tol: 1e-6,
            num_restarts: 10,
            seed: 0,
            variance_floor: super::VARIANCE_FLOOR,
        }
    }
}

impl EmTrainConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.num_restarts == 0 {
            return Err(Error::invalid(
                "max_iters and num_restarts must be positive",
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid("rel_tol must lie in (0, 1)"));
        }
        if !(self.variance_floor > 0.0) {
            return Err(Error::invalid("variance_floor must be positive"));
        }
        Ok(())
    }
}

/// Emission family requested from a training routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionKind {
    Discrete { num_symbols: usize },
    Gaussian,
    GaussianMixture { components: usize },
}

/// Log-likelihood trace and incidents of one EM restart.
#[derive(Debug, Clone)]
pub struct RestartTrace {
    /// Total training log-likelihood per iteration, evaluated before each
    /// parameter update.
    pub log_likelihoods: Vec<f64>,
    /// `(iteration, state)` pairs where a starved state or component had its
    /// emission parameters re-randomized.
    pub rerandomized: Vec<(usize, usize)>,
}

impl RestartTrace {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihoods.last().unwrap_or(&f64::NEG_INFINITY)
    }
}

/// Per-restart traces plus the index of the selected restart.
#[derive(Debug, Clone)]
pub struct TrainingHistory {
    pub restarts: Vec<RestartTrace>,
    pub winner: usize,
}

impl TrainingHistory {
    pub fn final_log_likelihood(&self) -> f64 {
        self.restarts[self.winner].final_log_likelihood()
    }
}

// ---------------------------------------------------------------------------
// Baum-Welch
// ---------------------------------------------------------------------------

/// Fit an HMM to unlabeled sequences by EM, restarting `num_restarts` times
/// from independent initial conditions and keeping the restart with the
/// highest final training log-likelihood (ties go to the lowest restart
/// index). Restarts run in parallel; the outcome does not depend on
/// scheduling.
pub fn baum_welch(
    dataset: &SequenceDataset,
    num_states: usize,
    kind: EmissionKind,
    config: &EmTrainConfig,
) -> Result<(HmmModel, TrainingHistory)> {
    config.validate()?;
    if num_states == 0 {
        return Err(Error::invalid("num_states must be at least 1"));
    }
    check_kind_against_data(dataset, kind)?;

    let floor = config.variance_floor.max(super::VARIANCE_FLOOR);
    let pooled = PooledStats::from_dataset(dataset, floor)?;

    let runs: Vec<(HmmModel, RestartTrace)> = (0..config.num_restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = substream(config.seed, restart as u64);
            let init = init_model(num_states, kind, &pooled, floor, &mut rng)?;
            em_run(dataset, init, config, &pooled, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut winner = 0;
    for (i, (_, trace)) in runs.iter().enumerate() {
        if trace.final_log_likelihood() > runs[winner].1.final_log_likelihood() {
            winner = i;
        }
    }
    let restarts: Vec<RestartTrace> = runs.iter().map(|(_, t)| t.clone()).collect();
    let model = runs.into_iter().nth(winner).unwrap().0;
    Ok((model, TrainingHistory { restarts, winner }))
}

fn check_kind_against_data(dataset: &SequenceDataset, kind: EmissionKind) -> Result<()> {
    match kind {
        EmissionKind::Discrete { num_symbols } => {
            if dataset.is_continuous() {
                return Err(Error::invalid(
                    "discrete emissions require a symbolic dataset",
                ));
            }
            if num_symbols == 0 {
                return Err(Error::invalid("num_symbols must be at least 1"));
            }
            if let Some(alpha) = dataset.alphabet() {
                if alpha > num_symbols {
                    return Err(Error::invalid(format!(
                        "dataset alphabet {alpha} exceeds requested num_symbols {num_symbols}"
                    )));
                }
            }
        }
        EmissionKind::Gaussian => {
            if !dataset.is_continuous() {
                return Err(Error::invalid(
                    "gaussian emissions require a continuous dataset",
                ));
            }
        }
        EmissionKind::GaussianMixture { components } => {
            if !dataset.is_continuous() {
                return Err(Error::invalid(
                    "gaussian mixture emissions require a continuous dataset",
                ));
            }
            if components == 0 {
                return Err(Error::invalid("mixture needs at least 1 component"));
            }
        }
    }
    Ok(())
}

/// Pooled observation statistics shared by all restarts.
struct PooledStats {
    points: Vec<Vec<f64>>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl PooledStats {
    fn from_dataset(dataset: &SequenceDataset, floor: f64) -> Result<Self> {
        if !dataset.is_continuous() {
            return Ok(Self {
                points: Vec::new(),
                mean: Vec::new(),
                var: Vec::new(),
            });
        }
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
        let mut var = vec![0.0; d];
        for x in &points {
            for dd in 0..d {
                let z = x[dd] - mean[dd];
                var[dd] += z * z;
            }
        }
        for v in var.iter_mut() {
            *v = (*v / n).max(floor);
        }
        Ok(Self { points, mean, var })
    }

    /// `count` well-spread cluster centers, via a short k-means run. Falls
    /// back to jittered random data points if clustering is not possible
    /// (fewer distinct points than requested centers).
    fn centers(&self, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let cfg = KMeansConfig {
            k: count,
            max_iters: 50,
            num_restarts: 1,
            seed: rng.gen(),
            tol: 1e-4,
        };
        if let Ok(fit) = kmeans_fit(&self.points, &cfg) {
            return fit.centroids;
        }
        (0..count)
            .map(|_| {
                let base = &self.points[rng.gen_range(0..self.points.len())];
                base.iter()
                    .zip(&self.var)
                    .map(|(&x, &v)| x + 0.01 * v.sqrt() * rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect()
    }

    /// Cluster the pooled points into `count` groups and return each center
    /// with its member points.
    fn partition(&self, count: usize, rng: &mut impl Rng) -> Vec<(Vec<f64>, Vec<Vec<f64>>)> {
        let cfg = KMeansConfig {
            k: count,
            max_iters: 50,
            num_restarts: 1,
            seed: rng.gen(),
            tol: 1e-4,
        };
        match kmeans_fit(&self.points, &cfg) {
            Ok(fit) => {
                let mut members = vec![Vec::new(); count];
                for (p, &a) in self.points.iter().zip(&fit.assignments) {
                    members[a].push(p.clone());
                }
                fit.centroids.into_iter().zip(members).collect()
            }
            Err(_) => self
                .centers(count, rng)
                .into_iter()
                .map(|c| (c, Vec::new()))
                .collect(),
        }
    }
}

/// Per-dimension variance of `points`, falling back to `default` for empty
/// sets, floored at `floor`.
fn dim_variance(points: &[Vec<f64>], default: &[f64], floor: f64) -> Vec<f64> {
    if points.is_empty() {
        return default.iter().map(|&v| v.max(floor)).collect();
    }
    let d = default.len();
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, &x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for p in points {
        for dd in 0..d {
            let z = p[dd] - mean[dd];
            var[dd] += z * z;
        }
    }
    var.iter().map(|&v| (v / n).max(floor)).collect()
}

/// `count` component means within one state cluster: sub-cluster centroids
/// when the member points support them, otherwise the state center jittered
/// by the within-state spread.
fn spread_means(
    members: &[Vec<f64>],
    center: &[f64],
    var: &[f64],
    count: usize,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    if count == 1 {
        return vec![center.to_vec()];
    }
    if !members.is_empty() {
        let cfg = KMeansConfig {
            k: count,
            max_iters: 30,
            num_restarts: 1,
            seed: rng.gen(),
            tol: 1e-4,
        };
        if let Ok(fit) = kmeans_fit(members, &cfg) {
            return fit.centroids;
        }
    }
    (0..count)
        .map(|_| {
            center
                .iter()
                .zip(var)
                .map(|(&c, &v)| c + v.sqrt() * rng.gen_range(-1.0..1.0))
                .collect()
        })
        .collect()
}

fn init_model(
    m: usize,
    kind: EmissionKind,
    pooled: &PooledStats,
    floor: f64,
    rng: &mut impl Rng,
) -> Result<HmmModel> {
    let rows = (0..m).map(|_| sample_dirichlet_flat(rng, m)).collect();
    let transitions = TransitionMatrix::new(rows)?;
    let initial = InitialDistribution::new(sample_dirichlet_flat(rng, m))?;

    let emission = match kind {
        EmissionKind::Discrete { num_symbols } => EmissionModel::discrete(
            (0..m)
                .map(|_| sample_dirichlet_flat(rng, num_symbols))
                .collect(),
        )?,
        EmissionKind::Gaussian => {
            let centers = pooled.centers(m, rng);
            EmissionModel::gaussian(
                centers
                    .into_iter()
                    .map(|c| GaussianParams::new(c, pooled.var.clone()))
                    .collect::<Result<_>>()?,
            )?
        }
        EmissionKind::GaussianMixture { components } => {
            // Two-level seeding: k-means splits the pooled points into
            // states, then each state's own points are clustered again to
            // place its components. Identical wide components would leave
            // EM on a symmetric stationary point.
            let d = pooled.mean.len();
            let partition = pooled.partition(m, rng);
            let states = partition
                .into_iter()
                .map(|(center, members)| {
                    let var = dim_variance(&members, &pooled.var, floor);
                    let comp_means = spread_means(&members, &center, &var, components, rng);
                    let comps = comp_means
                        .into_iter()
                        .map(|mean| GaussianParams::new(mean, var.clone()))
                        .collect::<Result<Vec<_>>>()?;
                    debug_assert_eq!(comps.len(), components);
                    debug_assert_eq!(comps[0].dim(), d);
                    MixtureParams::new(vec![1.0 / components as f64; components], comps)
                })
                .collect::<Result<_>>()?;
            EmissionModel::gaussian_mixture(states)?
        }
    };
    HmmModel::new(transitions, initial, emission)
}

// Scaled recursions over a precomputed likelihood matrix.

fn forward_scaled(likes: &[Vec<f64>], model: &HmmModel) -> Result<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    let len = likes.len();
    let m = model.num_states();
    let mut alpha = vec![vec![0.0; m]; len];
    let mut scaling = vec![0.0; len];
    for t in 0..len {
        if t == 0 {
            for i in 0..m {
                alpha[0][i] = model.initial().prob(i) * likes[0][i];
            }
        } else {
            for j in 0..m {
                let mut acc = 0.0;
                for i in 0..m {
                    acc += alpha[t - 1][i] * model.transitions().prob(i, j);
                }
                alpha[t][j] = acc * likes[t][j];
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
    let ll = scaling.iter().map(|c| c.ln()).sum();
    Ok((alpha, scaling, ll))
}

fn backward_scaled(likes: &[Vec<f64>], model: &HmmModel, scaling: &[f64]) -> Vec<Vec<f64>> {
    let len = likes.len();
    let m = model.num_states();
    let mut beta = vec![vec![0.0; m]; len];
    beta[len - 1].iter_mut().for_each(|v| *v = 1.0);
    for t in (0..len - 1).rev() {
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                acc += model.transitions().prob(i, j) * likes[t + 1][j] * beta[t + 1][j];
            }
            beta[t][i] = acc / scaling[t + 1];
        }
    }
    beta
}

/// Sufficient statistics accumulated over one E-step.
struct EmStats {
    total_ll: f64,
    pi: Vec<f64>,
    trans_num: Vec<Vec<f64>>,
    /// Occupancy over non-final steps (transition denominators).
    trans_den: Vec<f64>,
    /// Occupancy over all steps.
    occupancy: Vec<f64>,
    emission: EmissionStats,
}

enum EmissionStats {
    Discrete {
        counts: Vec<Vec<f64>>,
    },
    Gaussian {
        sum: Vec<Vec<f64>>,
        sum_sq: Vec<Vec<f64>>,
    },
    Mixture {
        occ: Vec<Vec<f64>>,
        sum: Vec<Vec<Vec<f64>>>,
        sum_sq: Vec<Vec<Vec<f64>>>,
    },
}

fn e_step(dataset: &SequenceDataset, model: &HmmModel) -> Result<EmStats> {
    let m = model.num_states();
    let mut stats = EmStats {
        total_ll: 0.0,
        pi: vec![0.0; m],
        trans_num: vec![vec![0.0; m]; m],
        trans_den: vec![0.0; m],
        occupancy: vec![0.0; m],
        emission: match model.emission() {
            EmissionModel::Discrete { probs } => EmissionStats::Discrete {
                counts: vec![vec![0.0; probs[0].len()]; m],
            },
            EmissionModel::Gaussian { states } => EmissionStats::Gaussian {
                sum: vec![vec![0.0; states[0].dim()]; m],
                sum_sq: vec![vec![0.0; states[0].dim()]; m],
            },
            EmissionModel::GaussianMixture { states } => {
                let c = states[0].components.len();
                let d = states[0].dim();
                EmissionStats::Mixture {
                    occ: vec![vec![0.0; c]; m],
                    sum: vec![vec![vec![0.0; d]; c]; m],
                    sum_sq: vec![vec![vec![0.0; d]; c]; m],
                }
            }
        },
    };

    for n in 0..dataset.num_sequences() {
        let seq = dataset.seq_view(n);
        let len = seq.len();

        // Per-step likelihoods, plus per-component weighted densities for
        // mixtures (reused for the responsibilities below).
        let mut likes = Vec::with_capacity(len);
        let mut comp_likes: Vec<Vec<Vec<f64>>> = Vec::new();
        match model.emission() {
            EmissionModel::GaussianMixture { states } => {
                let SeqView::Vectors(obs) = seq else {
                    return Err(Error::invalid("mixture model requires continuous data"));
                };
                for x in obs {
                    let per_state: Vec<Vec<f64>> = states
                        .iter()
                        .map(|mix| {
                            mix.weights
                                .iter()
                                .zip(&mix.components)
                                .map(|(w, comp)| w * comp.log_density(x).exp())
                                .collect()
                        })
                        .collect();
                    likes.push(per_state.iter().map(|row| row.iter().sum()).collect());
                    comp_likes.push(per_state);
                }
            }
            _ => {
                for t in 0..len {
                    likes.push(model.emission().likelihood_row(seq, t)?);
                }
            }
        }

        let (alpha, scaling, ll) = forward_scaled(&likes, model)?;
        let beta = backward_scaled(&likes, model, &scaling);
        stats.total_ll += ll;

        // gamma[t][i] = alpha[t][i] * beta[t][i], renormalized per step.
        let mut gamma = vec![vec![0.0; m]; len];
        for t in 0..len {
            for i in 0..m {
                gamma[t][i] = alpha[t][i] * beta[t][i];
            }
            normalize_row(&mut gamma[t]);
        }

        for i in 0..m {
            stats.pi[i] += gamma[0][i];
            for t in 0..len {
                stats.occupancy[i] += gamma[t][i];
            }
            for t in 0..len - 1 {
                stats.trans_den[i] += gamma[t][i];
            }
        }

        // xi[t][i][j], accumulated without storing the full tensor.
        let mut xi_row = vec![vec![0.0; m]; m];
        for t in 0..len - 1 {
            let mut total = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let v = alpha[t][i]
                        * model.transitions().prob(i, j)
                        * likes[t + 1][j]
                        * beta[t + 1][j];
                    xi_row[i][j] = v;
                    total += v;
                }
            }
            if total > 0.0 {
                for i in 0..m {
                    for j in 0..m {
                        stats.trans_num[i][j] += xi_row[i][j] / total;
                    }
                }
            }
        }

        match (&mut stats.emission, seq) {
            (EmissionStats::Discrete { counts }, SeqView::Symbols(obs)) => {
                for t in 0..len {
                    for i in 0..m {
                        counts[i][obs[t]] += gamma[t][i];
                    }
                }
            }
            (EmissionStats::Gaussian { sum, sum_sq }, SeqView::Vectors(obs)) => {
                for t in 0..len {
                    for i in 0..m {
                        let g = gamma[t][i];
                        for (d, &x) in obs[t].iter().enumerate() {
                            sum[i][d] += g * x;
                            sum_sq[i][d] += g * x * x;
                        }
                    }
                }
            }
            (EmissionStats::Mixture { occ, sum, sum_sq }, SeqView::Vectors(obs)) => {
                for t in 0..len {
                    for i in 0..m {
                        let state_like = likes[t][i];
                        if state_like <= 0.0 {
                            continue;
                        }
                        let g = gamma[t][i];
                        for (c, &wl) in comp_likes[t][i].iter().enumerate() {
                            let r = g * wl / state_like;
                            occ[i][c] += r;
                            for (d, &x) in obs[t].iter().enumerate() {
                                sum[i][c][d] += r * x;
                                sum_sq[i][c][d] += r * x * x;
                            }
                        }
                    }
                }
            }
            _ => unreachable!("emission stats shape follows the model"),
        }
    }
    Ok(stats)
}

/// Apply the M-step. Returns the updated model and the states whose emission
/// parameters had to be re-randomized because they received (numerically)
/// zero occupancy.
fn m_step(
    stats: &EmStats,
    model: &HmmModel,
    num_sequences: usize,
    config: &EmTrainConfig,
    pooled: &PooledStats,
    rng: &mut impl Rng,
) -> Result<(HmmModel, Vec<usize>)> {
    let m = model.num_states();
    let floor = config.variance_floor.max(super::VARIANCE_FLOOR);
    let mut rerandomized = Vec::new();

    let mut pi: Vec<f64> = stats.pi.iter().map(|&v| v / num_sequences as f64).collect();
    normalize_row(&mut pi);
    let initial = InitialDistribution::new(pi)?;

    let mut trans = vec![vec![0.0; m]; m];
    for i in 0..m {
        if stats.trans_den[i] > OCCUPANCY_EPS {
            for j in 0..m {
                trans[i][j] = stats.trans_num[i][j] / stats.trans_den[i];
            }
        }
        normalize_row(&mut trans[i]);
    }
    let transitions = TransitionMatrix::new(trans)?;

    let emission = match (&stats.emission, model.emission()) {
        (EmissionStats::Discrete { counts }, EmissionModel::Discrete { .. }) => {
            let k = counts[0].len();
            let mut rows = Vec::with_capacity(m);
            for i in 0..m {
                if stats.occupancy[i] <= OCCUPANCY_EPS {
                    rerandomized.push(i);
                    rows.push(sample_dirichlet_flat(rng, k));
                } else {
                    let mut row: Vec<f64> =
                        counts[i].iter().map(|&c| c / stats.occupancy[i]).collect();
                    normalize_row(&mut row);
                    rows.push(row);
                }
            }
            EmissionModel::discrete(rows)?
        }
        (EmissionStats::Gaussian { sum, sum_sq }, EmissionModel::Gaussian { .. }) => {
            let d = sum[0].len();
            let mut states = Vec::with_capacity(m);
            for i in 0..m {
                if stats.occupancy[i] <= OCCUPANCY_EPS {
                    rerandomized.push(i);
                    states.push(random_gaussian(pooled, floor, rng)?);
                } else {
                    let mut mean = vec![0.0; d];
                    let mut var = vec![0.0; d];
                    for dd in 0..d {
                        mean[dd] = sum[i][dd] / stats.occupancy[i];
                        var[dd] =
                            (sum_sq[i][dd] / stats.occupancy[i] - mean[dd] * mean[dd]).max(floor);
                    }
                    states.push(GaussianParams::new(mean, var)?);
                }
            }
            EmissionModel::gaussian(states)?
        }
        (EmissionStats::Mixture { occ, sum, sum_sq }, EmissionModel::GaussianMixture { .. }) => {
            let c = occ[0].len();
            let d = sum[0][0].len();
            let mut states = Vec::with_capacity(m);
            for i in 0..m {
                if stats.occupancy[i] <= OCCUPANCY_EPS {
                    rerandomized.push(i);
                    let comps = (0..c)
                        .map(|_| random_gaussian(pooled, floor, rng))
                        .collect::<Result<Vec<_>>>()?;
                    states.push(MixtureParams::new(vec![1.0 / c as f64; c], comps)?);
                    continue;
                }
                let mut weights = vec![0.0; c];
                let mut comps = Vec::with_capacity(c);
                let mut collapsed = false;
                for cc in 0..c {
                    weights[cc] = occ[i][cc] / stats.occupancy[i];
                    if occ[i][cc] <= OCCUPANCY_EPS {
                        collapsed = true;
                        comps.push(random_gaussian(pooled, floor, rng)?);
                        continue;
                    }
                    let mut mean = vec![0.0; d];
                    let mut var = vec![0.0; d];
                    for dd in 0..d {
                        mean[dd] = sum[i][cc][dd] / occ[i][cc];
                        var[dd] = (sum_sq[i][cc][dd] / occ[i][cc] - mean[dd] * mean[dd]).max(floor);
                    }
                    comps.push(GaussianParams::new(mean, var)?);
                }
                if collapsed {
                    rerandomized.push(i);
                    weights = vec![1.0 / c as f64; c];
                }
                normalize_row(&mut weights);
                states.push(MixtureParams::new(weights, comps)?);
            }
            EmissionModel::gaussian_mixture(states)?
        }
        _ => unreachable!("emission stats shape follows the model"),
    };

    Ok((HmmModel::new(transitions, initial, emission)?, rerandomized))
}

fn random_gaussian(pooled: &PooledStats, floor: f64, rng: &mut impl Rng) -> Result<GaussianParams> {
    let base = &pooled.points[rng.gen_range(0..pooled.points.len())];
    let mean = base
        .iter()
        .zip(&pooled.var)
        .map(|(&x, &v)| x + 0.1 * v.sqrt() * rng.gen_range(-1.0..1.0))
        .collect();
    GaussianParams::new(mean, pooled.var.iter().map(|&v| v.max(floor)).collect())
}

fn em_run(
    dataset: &SequenceDataset,
    init: HmmModel,
    config: &EmTrainConfig,
    pooled: &PooledStats,
    rng: &mut impl Rng,
) -> Result<(HmmModel, RestartTrace)> {
    let mut model = init;
    let mut trace = RestartTrace {
        log_likelihoods: Vec::new(),
        rerandomized: Vec::new(),
    };
    let mut prev_ll = f64::NEG_INFINITY;
    let mut last_rerand: Option<usize> = None;

    for iter in 0..config.max_iters {
        let stats = e_step(dataset, &model)?;
        let ll = stats.total_ll;
        trace.log_likelihoods.push(ll);

        // Skip the convergence check right after a re-randomization: the
        // trace may legitimately dip there.
        let stable = last_rerand.map_or(true, |r| iter > r + 1);
        if iter > 0 && stable {
            let rel = (ll - prev_ll) / prev_ll.abs().max(f64::MIN_POSITIVE);
            if rel < config.rel_tol {
                break;
            }
        }
        prev_ll = ll;
        if iter == config.max_iters - 1 {
            break;
        }

        let (next, rerandomized) =
            m_step(&stats, &model, dataset.num_sequences(), config, pooled, rng)?;
        if !rerandomized.is_empty() {
            last_rerand = Some(iter);
            for s in rerandomized {
                trace.rerandomized.push((iter, s));
            }
        }
        model = next;
    }
    Ok((model, trace))
}

// ---------------------------------------------------------------------------
// Supervised fitting
// ---------------------------------------------------------------------------

/// Maximum-likelihood fit from fully labeled sequences, by counting.
///
/// `pseudo_count` is added to every transition, initial-state, and
/// state-symbol count (additive smoothing); pass 0.0 for raw relative
/// frequencies. Count rows that stay all-zero become uniform. Gaussian
/// emissions use per-state sample means and variances; states with no
/// samples fall back to the pooled statistics.
pub fn fit_supervised(
    dataset: &SequenceDataset,
    num_states: usize,
    kind: EmissionKind,
    pseudo_count: f64,
) -> Result<HmmModel> {
    if num_states == 0 {
        return Err(Error::invalid("num_states must be at least 1"));
    }
    if pseudo_count < 0.0 {
        return Err(Error::invalid("pseudo_count must be nonnegative"));
    }
    check_kind_against_data(dataset, kind)?;
    let states = dataset
        .states()
        .ok_or_else(|| Error::invalid("supervised fitting requires state labels"))?;
    for seq in states {
        if let Some(&bad) = seq.iter().find(|&&s| s >= num_states) {
            return Err(Error::invalid(format!(
                "state label {bad} out of range for {num_states} states"
            )));
        }
    }

    let m = num_states;
    let mut pi_counts = vec![pseudo_count; m];
    let mut trans_counts = vec![vec![pseudo_count; m]; m];
    for seq in states {
        pi_counts[seq[0]] += 1.0;
        for w in seq.windows(2) {
            trans_counts[w[0]][w[1]] += 1.0;
        }
    }
    let mut pi = pi_counts;
    normalize_row(&mut pi);
    for row in trans_counts.iter_mut() {
        normalize_row(row);
    }
    let initial = InitialDistribution::new(pi)?;
    let transitions = TransitionMatrix::new(trans_counts)?;

    let emission = match kind {
        EmissionKind::Discrete { num_symbols } => {
            let mut counts = vec![vec![pseudo_count; num_symbols]; m];
            for n in 0..dataset.num_sequences() {
                let SeqView::Symbols(obs) = dataset.seq_view(n) else {
                    unreachable!("checked above");
                };
                for (t, &sym) in obs.iter().enumerate() {
                    if sym >= num_symbols {
                        return Err(Error::invalid(format!(
                            "symbol {sym} out of range for alphabet of {num_symbols}"
                        )));
                    }
                    counts[states[n][t]][sym] += 1.0;
                }
            }
            for row in counts.iter_mut() {
                normalize_row(row);
            }
            EmissionModel::discrete(counts)?
        }
        EmissionKind::Gaussian | EmissionKind::GaussianMixture { components: 1 } => {
            let floor = super::VARIANCE_FLOOR;
            let pooled = PooledStats::from_dataset(dataset, floor)?;
            let d = pooled.mean.len();
            let mut count = vec![0.0f64; m];
            let mut sum = vec![vec![0.0; d]; m];
            let mut sum_sq = vec![vec![0.0; d]; m];
            for n in 0..dataset.num_sequences() {
                let SeqView::Vectors(obs) = dataset.seq_view(n) else {
                    unreachable!("checked above");
                };
                for (t, x) in obs.iter().enumerate() {
                    let s = states[n][t];
                    count[s] += 1.0;
                    for (dd, &v) in x.iter().enumerate() {
                        sum[s][dd] += v;
                        sum_sq[s][dd] += v * v;
                    }
                }
            }
            let gaussians = (0..m)
                .map(|i| {
                    if count[i] == 0.0 {
                        GaussianParams::new(pooled.mean.clone(), pooled.var.clone())
                    } else {
                        let mean: Vec<f64> = sum[i].iter().map(|&v| v / count[i]).collect();
                        let var: Vec<f64> = (0..d)
                            .map(|dd| (sum_sq[i][dd] / count[i] - mean[dd] * mean[dd]).max(floor))
                            .collect();
                        GaussianParams::new(mean, var)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            match kind {
                EmissionKind::Gaussian => EmissionModel::gaussian(gaussians)?,
                _ => EmissionModel::gaussian_mixture(
                    gaussians
                        .into_iter()
                        .map(|g| MixtureParams::new(vec![1.0], vec![g]))
                        .collect::<Result<_>>()?,
                )?,
            }
        }
        EmissionKind::GaussianMixture { .. } => {
            return Err(Error::invalid(
                "supervised fitting supports discrete, gaussian, and single-component mixture emissions",
            ));
        }
    };

    HmmModel::new(transitions, initial, emission)
}
