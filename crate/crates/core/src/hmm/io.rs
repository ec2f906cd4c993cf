//! Model serialization: a self-describing JSON document whose probabilities
//! round-trip exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    EmissionModel, GaussianParams, HmmModel, InitialDistribution, MixtureParams, TransitionMatrix,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GaussianDoc {
    mean: Vec<f64>,
    var: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MixtureDoc {
    weights: Vec<f64>,
    components: Vec<GaussianDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum EmissionDoc {
    Discrete { probs: Vec<Vec<f64>> },
    Gaussian { states: Vec<GaussianDoc> },
    Mixture { mixtures: Vec<MixtureDoc> },
}

/// Optional descriptive fields stored alongside the parameters.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ModelMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_log_likelihood: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Doc {
    kind: String,
    transitions: Vec<Vec<f64>>,
    initial: Vec<f64>,
    emission: EmissionDoc,
    #[serde(default)]
    meta: ModelMeta,
}

/// A model plus its metadata, as written to and read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub model: HmmModel,
    pub meta: ModelMeta,
}

impl ModelDocument {
    pub fn new(model: HmmModel) -> Self {
        Self {
            model,
            meta: ModelMeta::default(),
        }
    }

    pub fn with_meta(model: HmmModel, meta: ModelMeta) -> Self {
        Self { model, meta }
    }

    pub fn to_json(&self) -> String {
        let emission = match self.model.emission() {
            EmissionModel::Discrete { probs } => EmissionDoc::Discrete {
                probs: probs.clone(),
            },
            EmissionModel::Gaussian { states } => EmissionDoc::Gaussian {
                states: states
                    .iter()
                    .map(|g| GaussianDoc {
                        mean: g.mean.clone(),
                        var: g.var.clone(),
                    })
                    .collect(),
            },
            EmissionModel::GaussianMixture { states } => EmissionDoc::Mixture {
                mixtures: states
                    .iter()
                    .map(|m| MixtureDoc {
                        weights: m.weights.clone(),
                        components: m
                            .components
                            .iter()
                            .map(|g| GaussianDoc {
                                mean: g.mean.clone(),
                                var: g.var.clone(),
                            })
                            .collect(),
                    })
                    .collect(),
            },
        };
        let doc = Doc {
            kind: self.model.kind().to_string(),
            transitions: self.model.transitions().rows().to_vec(),
            initial: self.model.initial().probs().to_vec(),
            emission,
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Doc = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("bad model document: {e}")))?;
        let transitions = TransitionMatrix::new(doc.transitions)?;
        let initial = InitialDistribution::new(doc.initial)?;
        let emission = match (doc.kind.as_str(), doc.emission) {
            ("dhmm", EmissionDoc::Discrete { probs }) => EmissionModel::discrete(probs)?,
            ("chmm-gaussian", EmissionDoc::Gaussian { states }) => EmissionModel::gaussian(
                states
                    .into_iter()
                    .map(|g| GaussianParams::new(g.mean, g.var))
                    .collect::<Result<_>>()?,
            )?,
            ("chmm-gmm", EmissionDoc::Mixture { mixtures }) => EmissionModel::gaussian_mixture(
                mixtures
                    .into_iter()
                    .map(|m| {
                        let components = m
                            .components
                            .into_iter()
                            .map(|g| GaussianParams::new(g.mean, g.var))
                            .collect::<Result<_>>()?;
                        MixtureParams::new(m.weights, components)
                    })
                    .collect::<Result<_>>()?,
            )?,
            (kind, _) => {
                return Err(Error::invalid(format!(
                    "model kind {kind:?} does not match its emission payload"
                )))
            }
        };
        Ok(Self {
            model: HmmModel::new(transitions, initial, emission)?,
            meta: doc.meta,
        })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_json().as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidInput(detail) => Error::parse(path, detail),
            other => other,
        })
    }
}
