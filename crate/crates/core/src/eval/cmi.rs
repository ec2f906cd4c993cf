//! Plug-in conditional mutual information I(S_{t+1}; S_{t-1} | S_t) from
//! pooled label triples, a diagnostic for first-order Markov structure.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Minimum triple count below which the estimate is flagged.
const LOW_SAMPLE_THRESHOLD: usize = 100;

/// Estimated conditional mutual information in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct CmiEstimate {
    pub nats: f64,
    pub num_triples: usize,
    /// Set when fewer than 100 triples were available.
    pub low_sample: bool,
}

/// Estimate I(S_{t+1}; S_{t-1} | S_t) by plugging pooled empirical triple
/// frequencies into the CMI formula. Nonnegative and invariant to state
/// relabeling.
pub fn cmi_markov_check(sequences: &[Vec<usize>]) -> Result<CmiEstimate> {
    let mut triples: HashMap<(usize, usize, usize), f64> = HashMap::new();
    let mut num_triples = 0usize;
    for seq in sequences {
        for w in seq.windows(3) {
            // Key order: (previous, current, next).
            *triples.entry((w[0], w[1], w[2])).or_insert(0.0) += 1.0;
            num_triples += 1;
        }
    }
    if num_triples == 0 {
        return Err(Error::invalid(
            "need at least one sequence of length 3 or more",
        ));
    }
    let n = num_triples as f64;

    let mut current: HashMap<usize, f64> = HashMap::new();
    let mut prev_cur: HashMap<(usize, usize), f64> = HashMap::new();
    let mut cur_next: HashMap<(usize, usize), f64> = HashMap::new();
    for (&(p, c, x), &count) in &triples {
        *current.entry(c).or_insert(0.0) += count;
        *prev_cur.entry((p, c)).or_insert(0.0) += count;
        *cur_next.entry((c, x)).or_insert(0.0) += count;
    }

    // I(X; Z | Y) = sum p(z,y,x) ln [ p(z,y,x) p(y) / (p(z,y) p(y,x)) ]
    // with Z = previous, Y = current, X = next state.
    let mut nats = 0.0;
    for (&(p, c, x), &count) in &triples {
        let joint = count / n;
        let term =
            (joint * (current[&c] / n)) / ((prev_cur[&(p, c)] / n) * (cur_next[&(c, x)] / n));
        nats += joint * term.ln();
    }

    Ok(CmiEstimate {
        nats: nats.max(0.0),
        num_triples,
        low_sample: num_triples < LOW_SAMPLE_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_categorical, seeded};

    #[test]
    fn first_order_chain_scores_near_zero() {
        // 2-state chain, ~1e5 triples.
        let table = [[0.7, 0.3], [0.4, 0.6]];
        let mut rng = seeded(17);
        let mut sequences = Vec::new();
        for _ in 0..100 {
            let mut seq = vec![0usize];
            for _ in 0..1001 {
                let s = *seq.last().unwrap();
                seq.push(sample_categorical(&mut rng, &table[s]));
            }
            sequences.push(seq);
        }
        let est = cmi_markov_check(&sequences).unwrap();
        assert!(est.num_triples >= 100_000);
        assert!(!est.low_sample);
        assert!(est.nats < 0.01, "CMI {} should be near zero", est.nats);
        assert!(est.nats >= 0.0);
    }

    #[test]
    fn deterministic_two_step_dependence_scores_ln_ns() {
        // s_{t+1} = s_{t-1} exactly, s_t independent uniform: alternating
        // (a, b, a, b, ...) with a, b fresh uniform draws per sequence.
        let ns = 4usize;
        let mut rng = seeded(5);
        let uniform = vec![1.0 / ns as f64; ns];
        let mut sequences = Vec::new();
        for _ in 0..20_000 {
            let a = sample_categorical(&mut rng, &uniform);
            let b = sample_categorical(&mut rng, &uniform);
            sequences.push(vec![a, b, a, b, a]);
        }
        let est = cmi_markov_check(&sequences).unwrap();
        let expected = (ns as f64).ln();
        assert!(
            (est.nats - expected).abs() < 0.01,
            "CMI {} should be close to ln {ns} = {expected}",
            est.nats
        );
    }

    #[test]
    fn relabeling_does_not_change_the_estimate() {
        let mut rng = seeded(23);
        let table = [[0.5, 0.25, 0.25], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]];
        let mut sequences = Vec::new();
        for _ in 0..50 {
            let mut seq = vec![0usize];
            for _ in 0..100 {
                let s = *seq.last().unwrap();
                seq.push(sample_categorical(&mut rng, &table[s]));
            }
            sequences.push(seq);
        }
        let a = cmi_markov_check(&sequences).unwrap();
        let relabeled: Vec<Vec<usize>> = sequences
            .iter()
            .map(|s| s.iter().map(|&v| (v + 2) % 3).collect())
            .collect();
        let b = cmi_markov_check(&relabeled).unwrap();
        assert!((a.nats - b.nats).abs() < 1e-12);
    }

    #[test]
    fn low_sample_flag_and_errors() {
        assert!(cmi_markov_check(&[vec![0, 1], vec![1, 0]]).is_err());
        let est = cmi_markov_check(&[vec![0, 1, 0, 1]]).unwrap();
        assert!(est.low_sample);
        assert_eq!(est.num_triples, 2);
    }
}
