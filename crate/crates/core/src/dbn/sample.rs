//! Ancestral sampling of labeled sequences from a template.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{CpdSet, DbnSpec, NodeId};
use crate::dataset::{Provenance, SequenceDataset};
use crate::error::{Error, Result};
use crate::rng::{sample_categorical, substream};

struct SeqSample {
    states: Vec<usize>,
    inputs: Vec<Vec<usize>>,
    obs: Vec<Vec<f64>>,
}

/// Sample `n` independent sequences from the template, reproducibly from
/// `seed`. Each sequence uses its own derived substream, so the result does
/// not depend on evaluation order.
pub fn sample_dataset(spec: &DbnSpec, n: usize, seed: u64) -> Result<SequenceDataset> {
    spec.validate()?;
    let cpds = spec.cpds.as_ref().ok_or_else(|| Error::SpecValidation {
        node: "graph".into(),
        detail: "template has no CPDs attached".into(),
    })?;
    if n == 0 {
        return Err(Error::invalid("need at least one sequence"));
    }
    let topo = spec.topo_order()?;

    let samples: Vec<SeqSample> = (0..n)
        .into_par_iter()
        .map(|index| sample_sequence(spec, cpds, &topo, substream(seed, index as u64)))
        .collect::<Result<Vec<_>>>()?;

    let mut observations = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut inputs = Vec::with_capacity(n);
    for s in samples {
        observations.push(s.obs);
        states.push(s.states);
        inputs.push(s.inputs);
    }

    let mut dataset = SequenceDataset::continuous(observations)?.with_states(states)?;
    if spec.num_inputs() > 0 {
        dataset = dataset.with_inputs(inputs)?;
    }
    Ok(dataset.with_provenance(Provenance {
        label: spec.label.clone(),
        seed,
        spec: Some(
            serde_json::to_value(spec)
                .map_err(|e| Error::invalid(format!("template not serializable: {e}")))?,
        ),
    }))
}

fn sample_sequence(
    spec: &DbnSpec,
    cpds: &CpdSet,
    topo: &[NodeId],
    mut rng: impl Rng,
) -> Result<SeqSample> {
    let t_len = spec.t_len;
    let mut states: Vec<usize> = Vec::with_capacity(t_len);
    let mut inputs: Vec<Vec<usize>> = Vec::with_capacity(t_len);
    let mut obs: Vec<Vec<f64>> = Vec::with_capacity(t_len);

    for t in 0..t_len {
        inputs.push(vec![0; spec.num_inputs()]);
        obs.push(Vec::with_capacity(spec.obs_dim()));
        let mut cur_state: Option<usize> = None;

        for &node in topo {
            // Parent values in canonical order. A parent slot before the
            // start of the sequence is drawn uniformly, which realizes the
            // uniform-marginalized boundary conditional.
            let parents = spec.parents(node);
            let mut values = Vec::with_capacity(parents.len());
            for &(parent, lag) in &parents {
                let value = if lag == 0 {
                    match parent {
                        NodeId::State => cur_state.expect("topological order"),
                        NodeId::Input(i) => inputs[t][i],
                        NodeId::Obs(_) => unreachable!("validated: no obs children"),
                    }
                } else if t >= lag {
                    match parent {
                        NodeId::State => states[t - lag],
                        NodeId::Input(i) => inputs[t - lag][i],
                        NodeId::Obs(_) => unreachable!("validated: no obs children"),
                    }
                } else {
                    rng.gen_range(0..spec.cardinality(parent)?)
                };
                values.push(value);
            }
            let config = spec.config_index(node, &values)?;

            match node {
                NodeId::State => {
                    cur_state = Some(sample_categorical(&mut rng, &cpds.state.table[config]));
                }
                NodeId::Input(i) => {
                    inputs[t][i] = sample_categorical(&mut rng, &cpds.inputs[i].table[config]);
                }
                NodeId::Obs(j) => {
                    let row = &cpds.obs[j].table[config];
                    for d in 0..row.mean.len() {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        obs[t].push(row.mean[d] + row.var[d].sqrt() * z);
                    }
                }
            }
        }
        states.push(cur_state.expect("every template has a state node"));
    }

    Ok(SeqSample {
        states,
        inputs,
        obs,
    })
}
