//! Observation discretization: k-means codebooks mapping continuous
//! observations to symbols, with two fitting strategies.
//!
//! Pooled fitting concatenates every sequence and time step into one point
//! set and fits a single codebook; per-slice fitting fits an independent
//! codebook for each time index, for series whose structure changes over
//! time.

mod kmeans;
mod select;

pub use kmeans::{kmeans_fit, KMeansConfig, KMeansFit};
pub use select::{
    elbow_of_curve, select_k_elbow, select_k_silhouette, silhouette_score, KSelection,
    SILHOUETTE_SAMPLE_CAP,
};

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{ObsData, SequenceDataset};
use crate::error::{Error, Result};
use kmeans::nearest_centroid;

/// Whether a codebook was fitted on pooled observations or per time slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookMode {
    Pooled,
    PerSlice,
}

/// Fitted quantizer: one centroid set (pooled) or one per time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub mode: CodebookMode,
    /// `centroids[set][centroid][dim]`; pooled codebooks have a single set.
    pub centroids: Vec<Vec<Vec<f64>>>,
    /// Sequence length the codebook was fitted on (per-slice mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted_t: Option<usize>,
}

impl Codebook {
    /// Symbol alphabet size: the largest centroid count over all sets.
    pub fn alphabet(&self) -> usize {
        self.centroids.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.centroids[0][0].len()
    }

    fn validate(&self) -> Result<()> {
        if self.centroids.is_empty() || self.centroids.iter().any(Vec::is_empty) {
            return Err(Error::invalid("codebook must have nonempty centroid sets"));
        }
        let dim = self.centroids[0][0].len();
        if dim == 0 || self.centroids.iter().flatten().any(|c| c.len() != dim) {
            return Err(Error::invalid("codebook centroids disagree on dimension"));
        }
        match self.mode {
            CodebookMode::Pooled => {
                if self.centroids.len() != 1 {
                    return Err(Error::invalid("pooled codebook must have exactly one set"));
                }
            }
            CodebookMode::PerSlice => {
                if self.fitted_t != Some(self.centroids.len()) {
                    return Err(Error::invalid(
                        "per-slice codebook must record fitted_t matching its set count",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({
            "mode": self.mode,
            "k": self.alphabet(),
            "centroids": self.centroids,
            "fitted_T": self.fitted_t,
        });
        serde_json::to_string_pretty(&doc).expect("codebook serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            mode: CodebookMode,
            centroids: Vec<Vec<Vec<f64>>>,
            #[serde(rename = "fitted_T")]
            fitted_t: Option<usize>,
        }
        let doc: Doc = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("bad codebook document: {e}")))?;
        let cb = Codebook {
            mode: doc.mode,
            centroids: doc.centroids,
            fitted_t: doc.fitted_t,
        };
        cb.validate()?;
        Ok(cb)
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

fn continuous_obs(dataset: &SequenceDataset) -> Result<&Vec<Vec<Vec<f64>>>> {
    match dataset.obs() {
        ObsData::Continuous(obs) => Ok(obs),
        ObsData::Symbolic(_) => Err(Error::invalid(
            "discretization requires continuous observations",
        )),
    }
}

/// Fit one k-means codebook on all observations pooled across sequences and
/// time, and return the symbolized dataset along with the codebook.
/// `config.k` is the symbol alphabet size.
pub fn discretize_pooled(
    dataset: &SequenceDataset,
    config: &KMeansConfig,
) -> Result<(SequenceDataset, Codebook)> {
    let obs = continuous_obs(dataset)?;
    let points = dataset.pooled_points()?;
    let fit = kmeans_fit(&points, config)?;

    let mut symbols = Vec::with_capacity(obs.len());
    let mut cursor = 0;
    for seq in obs {
        symbols.push(fit.assignments[cursor..cursor + seq.len()].to_vec());
        cursor += seq.len();
    }
    let codebook = Codebook {
        mode: CodebookMode::Pooled,
        centroids: vec![fit.centroids],
        fitted_t: None,
    };
    Ok((dataset.to_symbolic(symbols, config.k)?, codebook))
}

/// Fit an independent codebook per time index, using `ks[t]` clusters for
/// slice `t` (`ks` of length 1 applies the same count everywhere). Requires
/// every sequence to have the same length.
pub fn discretize_per_slice(
    dataset: &SequenceDataset,
    ks: &[usize],
    config: &KMeansConfig,
) -> Result<(SequenceDataset, Codebook)> {
    let obs = continuous_obs(dataset)?;
    let t_len = dataset.uniform_len().ok_or_else(|| {
        Error::invalid("per-slice discretization requires equal-length sequences")
    })?;
    if ks.is_empty() || (ks.len() != 1 && ks.len() != t_len) {
        return Err(Error::invalid(format!(
            "expected 1 or {t_len} cluster counts, got {}",
            ks.len()
        )));
    }

    let mut sets = Vec::with_capacity(t_len);
    let mut symbols = vec![Vec::with_capacity(t_len); obs.len()];
    for t in 0..t_len {
        let k = if ks.len() == 1 { ks[0] } else { ks[t] };
        let slice_points: Vec<Vec<f64>> = obs.iter().map(|seq| seq[t].clone()).collect();
        let slice_config = KMeansConfig {
            k,
            seed: config.seed.wrapping_add(t as u64),
            ..config.clone()
        };
        let fit = kmeans_fit(&slice_points, &slice_config)?;
        for (n, &a) in fit.assignments.iter().enumerate() {
            symbols[n].push(a);
        }
        sets.push(fit.centroids);
    }
    let alphabet = sets.iter().map(Vec::len).max().unwrap();
    let codebook = Codebook {
        mode: CodebookMode::PerSlice,
        centroids: sets,
        fitted_t: Some(t_len),
    };
    Ok((dataset.to_symbolic(symbols, alphabet)?, codebook))
}

/// Quantize a continuous dataset with an already-fitted codebook. Never
/// refits; assignment is nearest centroid with ties to the lowest index.
pub fn apply_codebook(codebook: &Codebook, dataset: &SequenceDataset) -> Result<SequenceDataset> {
    codebook.validate()?;
    let obs = continuous_obs(dataset)?;
    if dataset.dim() != Some(codebook.dim()) {
        return Err(Error::invalid(format!(
            "dataset dimension {:?} does not match codebook dimension {}",
            dataset.dim(),
            codebook.dim()
        )));
    }
    let symbols: Vec<Vec<usize>> = match codebook.mode {
        CodebookMode::Pooled => obs
            .iter()
            .map(|seq| {
                seq.iter()
                    .map(|x| nearest_centroid(x, &codebook.centroids[0]))
                    .collect()
            })
            .collect(),
        CodebookMode::PerSlice => {
            let fitted_t = codebook.fitted_t.unwrap();
            if dataset.uniform_len() != Some(fitted_t) {
                return Err(Error::invalid(format!(
                    "per-slice codebook was fitted for length {fitted_t}, dataset differs"
                )));
            }
            obs.iter()
                .map(|seq| {
                    seq.iter()
                        .enumerate()
                        .map(|(t, x)| nearest_centroid(x, &codebook.centroids[t]))
                        .collect()
                })
                .collect()
        }
    };
    dataset.to_symbolic(symbols, codebook.alphabet())
}
