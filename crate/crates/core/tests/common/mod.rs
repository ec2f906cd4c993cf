//! Brute-force oracles and model generators shared by the integration and
//! acceptance suites. Everything here is deliberately independent of the
//! library's recursions: likelihoods come from explicit enumeration over all
//! state paths.

use hmmbench_core::hmm::{EmissionModel, HmmModel, InitialDistribution, SeqView, TransitionMatrix};
use hmmbench_core::rng::{sample_dirichlet_flat, seeded};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    seeded(seed)
}

/// Random discrete HMM with Dirichlet rows.
pub fn random_discrete_model(rng: &mut impl Rng, m: usize, k: usize) -> HmmModel {
    let transitions =
        TransitionMatrix::new((0..m).map(|_| sample_dirichlet_flat(rng, m)).collect()).unwrap();
    let initial = InitialDistribution::new(sample_dirichlet_flat(rng, m)).unwrap();
    let emission =
        EmissionModel::discrete((0..m).map(|_| sample_dirichlet_flat(rng, k)).collect()).unwrap();
    HmmModel::new(transitions, initial, emission).unwrap()
}

/// Per-step emission likelihoods for every state, straight from the model.
fn likes(model: &HmmModel, seq: SeqView<'_>) -> Vec<Vec<f64>> {
    (0..seq.len())
        .map(|t| model.emission().likelihood_row(seq, t).unwrap())
        .collect()
}

fn all_paths(m: usize, t: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = m.pow(t as u32);
    (0..total).map(move |mut idx| {
        let mut path = vec![0usize; t];
        for slot in (0..t).rev() {
            path[slot] = idx % m;
            idx /= m;
        }
        path
    })
}

/// Joint probability of one state path with the observations, in linear space.
pub fn path_probability(model: &HmmModel, path: &[usize], likes: &[Vec<f64>]) -> f64 {
    let mut p = model.initial().prob(path[0]) * likes[0][path[0]];
    for t in 1..path.len() {
        p *= model.transitions().prob(path[t - 1], path[t]) * likes[t][path[t]];
    }
    p
}

/// Joint log probability accumulated the way the dynamic program does
/// (time-ordered additions), so exact ties reproduce bit for bit.
pub fn path_log_joint(model: &HmmModel, path: &[usize], likes: &[Vec<f64>]) -> f64 {
    let mut lp = model.initial().prob(path[0]).ln() + likes[0][path[0]].ln();
    for t in 1..path.len() {
        lp += model.transitions().prob(path[t - 1], path[t]).ln();
        lp += likes[t][path[t]].ln();
    }
    lp
}

/// ln P(observations) by summing every path's probability in linear space.
pub fn brute_force_log_likelihood(model: &HmmModel, seq: SeqView<'_>) -> f64 {
    let likes = likes(model, seq);
    let m = model.num_states();
    let total: f64 = all_paths(m, seq.len())
        .map(|path| path_probability(model, &path, &likes))
        .sum();
    total.ln()
}

/// Smoothed posterior P(state at `t` = i | observations) by enumeration.
pub fn brute_force_posteriors(model: &HmmModel, seq: SeqView<'_>) -> Vec<Vec<f64>> {
    let likes = likes(model, seq);
    let m = model.num_states();
    let t_len = seq.len();
    let mut mass = vec![vec![0.0; m]; t_len];
    let mut total = 0.0;
    for path in all_paths(m, t_len) {
        let p = path_probability(model, &path, &likes);
        total += p;
        for (t, &s) in path.iter().enumerate() {
            mass[t][s] += p;
        }
    }
    for row in mass.iter_mut() {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    mass
}

/// Exhaustive Viterbi: the maximal joint log probability and the optimal
/// path, breaking exact ties toward the path whose states are smallest read
/// from the final step backwards (the dynamic program's backtracking order).
pub fn brute_force_viterbi(model: &HmmModel, seq: SeqView<'_>) -> (Vec<usize>, f64) {
    let likes = likes(model, seq);
    let m = model.num_states();
    let mut best_lp = f64::NEG_INFINITY;
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for path in all_paths(m, seq.len()) {
        let lp = path_log_joint(model, &path, &likes);
        if lp > best_lp {
            best_lp = lp;
            candidates.clear();
            candidates.push(path);
        } else if lp == best_lp {
            candidates.push(path);
        }
    }
    let path = candidates
        .into_iter()
        .min_by(|a, b| {
            a.iter()
                .rev()
                .zip(b.iter().rev())
                .map(|(x, y)| x.cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    (path, best_lp)
}
