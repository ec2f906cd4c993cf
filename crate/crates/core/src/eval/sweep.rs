//! Training-ratio sweep: split by whole sequences, train each model kind,
//! decode the held-out sequences, and tabulate accuracy against model size.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{accuracy, map_states};
use crate::dataset::SequenceDataset;
use crate::discretize::{
    apply_codebook, discretize_per_slice, discretize_pooled, CodebookMode, KMeansConfig,
};
use crate::error::{Error, Result};
use crate::hmm::{
    baum_welch, count_params_chmm, count_params_dhmm, fit_supervised, EmTrainConfig, EmissionKind,
    HmmModel,
};
use crate::rng::substream;

/// Model variants the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SupervisedDhmm,
    UnsupervisedDhmm,
    UnsupervisedChmm,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::SupervisedDhmm => "supervised-dhmm",
            ModelKind::UnsupervisedDhmm => "unsupervised-dhmm",
            ModelKind::UnsupervisedChmm => "unsupervised-chmm",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supervised-dhmm" => Ok(ModelKind::SupervisedDhmm),
            "unsupervised-dhmm" => Ok(ModelKind::UnsupervisedDhmm),
            "unsupervised-chmm" => Ok(ModelKind::UnsupervisedChmm),
            other => Err(Error::invalid(format!(
                "unknown model kind {other:?}; expected supervised-dhmm, unsupervised-dhmm, or unsupervised-chmm"
            ))),
        }
    }
}

/// Sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Fractions of sequences used for training, strictly descending.
    pub training_ratios: Vec<f64>,
    pub kinds: Vec<ModelKind>,
    /// Number of hidden states fitted by every model.
    pub num_states: usize,
    /// Symbol alphabet for the discrete kinds (codebook size when the
    /// dataset is continuous).
    pub symbols: usize,
    /// Codebook strategy used when a continuous dataset feeds a discrete kind.
    pub discretize_mode: CodebookMode,
    /// Mixture order of the continuous kind.
    pub mixture_components: usize,
    pub em: EmTrainConfig,
    /// Additive smoothing for supervised fitting.
    pub supervised_pseudo_count: f64,
    pub split_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            training_ratios: vec![0.8, 0.3, 0.1, 0.005, 0.001],
            kinds: vec![
                ModelKind::SupervisedDhmm,
                ModelKind::UnsupervisedDhmm,
                ModelKind::UnsupervisedChmm,
            ],
            num_states: 2,
            symbols: 2,
            discretize_mode: CodebookMode::Pooled,
            mixture_components: 1,
            em: EmTrainConfig::default(),
            supervised_pseudo_count: 1.0,
            split_seed: 0,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.training_ratios.is_empty() {
            return Err(Error::invalid("need at least one training ratio"));
        }
        if self.training_ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::invalid("training ratios must lie in (0, 1)"));
        }
        if self.training_ratios.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::invalid(
                "training ratios must be strictly descending",
            ));
        }
        if self.kinds.is_empty() {
            return Err(Error::invalid("need at least one model kind"));
        }
        if self.num_states == 0 || self.symbols == 0 || self.mixture_components == 0 {
            return Err(Error::invalid(
                "num_states, symbols, and mixture_components must be positive",
            ));
        }
        if self.supervised_pseudo_count < 0.0 {
            return Err(Error::invalid(
                "supervised_pseudo_count must be nonnegative",
            ));
        }
        Ok(())
    }
}

/// One sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: ModelKind,
    pub training_ratio: f64,
    pub n_train_sequences: usize,
    /// Training sequences times their lengths.
    pub n_train_samples: usize,
    pub n_params: u64,
    pub accuracy_pct: f64,
    pub wall_ms: u64,
    /// Final training log-likelihood for the EM kinds.
    pub final_log_likelihood: Option<f64>,
    /// Log-likelihood trace of the winning EM restart.
    pub ll_trace: Option<Vec<f64>>,
    /// Why the cell was skipped, if it was (accuracy is 0 then).
    pub skipped: Option<String>,
}

/// All sweep cells, ordered by kind then ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// CSV rendering. Skipped cells leave the accuracy empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "model_kind,training_ratio,n_train_samples,n_params,accuracy_pct,wall_ms\n",
        );
        for row in &self.rows {
            let acc = if row.skipped.is_some() {
                String::new()
            } else {
                format!("{:.2}", row.accuracy_pct)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.kind, row.training_ratio, row.n_train_samples, row.n_params, acc, row.wall_ms
            ));
        }
        out
    }

    /// Markdown table in the layout of the published accuracy tables.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(
            "| Model Type | Number of Parameters | Training Ratio | Number of Training Samples | Accuracy (%) |\n",
        );
        out.push_str("|---|---|---|---|---|\n");
        for row in &self.rows {
            let acc = match &row.skipped {
                Some(reason) => format!("skipped: {reason}"),
                None => format!("{:.2}", row.accuracy_pct),
            };
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                row.kind, row.n_params, row.training_ratio, row.n_train_samples, acc
            ));
        }
        out
    }
}

/// Run the sweep: for each ratio, the first `ceil(ratio * N)` sequences of a
/// seeded shuffle train every requested kind, and the remaining sequences
/// are decoded with Viterbi and scored. Unsupervised kinds are relabeled by
/// a state mapping fitted on the training split only.
pub fn run_sweep(dataset: &SequenceDataset, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let states = dataset
        .states()
        .ok_or_else(|| Error::invalid("sweep requires a labeled dataset"))?;
    let max_label = states.iter().flatten().max().copied().unwrap_or(0);
    if max_label >= config.num_states {
        return Err(Error::invalid(format!(
            "dataset labels reach {max_label} but the sweep fits {} states",
            config.num_states
        )));
    }

    let n = dataset.num_sequences();
    let mut shuffled: Vec<usize> = (0..n).collect();
    let mut rng = substream(config.split_seed, 0);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        shuffled.swap(i, j);
    }

    let mut rows = Vec::new();
    for (kind_idx, &kind) in config.kinds.iter().enumerate() {
        for (ratio_idx, &ratio) in config.training_ratios.iter().enumerate() {
            let cell_seed = config
                .em
                .seed
                .wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(
                    (kind_idx * config.training_ratios.len() + ratio_idx) as u64 + 1,
                ));
            rows.push(run_cell(
                dataset, config, &shuffled, kind, ratio, cell_seed,
            )?);
        }
    }
    Ok(SweepResult { rows })
}

fn run_cell(
    dataset: &SequenceDataset,
    config: &SweepConfig,
    shuffled: &[usize],
    kind: ModelKind,
    ratio: f64,
    cell_seed: u64,
) -> Result<SweepRow> {
    let n = dataset.num_sequences();
    let n_train = ((ratio * n as f64).ceil() as usize).min(n);
    let train_idx = &shuffled[..n_train];
    let test_idx = &shuffled[n_train..];

    let n_train_samples: usize = train_idx.iter().map(|&i| dataset.seq_len(i)).sum();
    let mut row = SweepRow {
        kind,
        training_ratio: ratio,
        n_train_sequences: n_train,
        n_train_samples,
        n_params: 0,
        accuracy_pct: 0.0,
        wall_ms: 0,
        final_log_likelihood: None,
        ll_trace: None,
        skipped: None,
    };
    if n_train == 0 {
        row.skipped = Some("training split has no sequences".into());
        return Ok(row);
    }
    if test_idx.is_empty() {
        row.skipped = Some("test split has no sequences".into());
        return Ok(row);
    }

    let start = Instant::now();
    let train = dataset.subset(train_idx)?;
    let test = dataset.subset(test_idx)?;
    let m = config.num_states;

    // Discrete kinds need symbols; fit any codebook on the training split
    // only and apply it to the test split.
    let (train_d, test_d, alphabet) = match kind {
        ModelKind::UnsupervisedChmm => (None, None, 0),
        ModelKind::SupervisedDhmm | ModelKind::UnsupervisedDhmm => {
            if train.is_continuous() {
                let km = KMeansConfig {
                    k: config.symbols,
                    seed: cell_seed ^ 0xC0DE,
                    ..Default::default()
                };
                let (train_sym, codebook) = match config.discretize_mode {
                    CodebookMode::Pooled => discretize_pooled(&train, &km)?,
                    CodebookMode::PerSlice => discretize_per_slice(&train, &[config.symbols], &km)?,
                };
                let test_sym = apply_codebook(&codebook, &test)?;
                (Some(train_sym), Some(test_sym), config.symbols)
            } else {
                let alphabet = train.alphabet().unwrap_or(config.symbols);
                (Some(train.clone()), Some(test.clone()), alphabet)
            }
        }
    };

    let em = EmTrainConfig {
        seed: cell_seed,
        ..config.em.clone()
    };

    let (model, mapping, n_params): (HmmModel, Option<super::StateMapping>, u64) = match kind {
        ModelKind::SupervisedDhmm => {
            let train_sym = train_d.as_ref().unwrap();
            let model = fit_supervised(
                train_sym,
                m,
                EmissionKind::Discrete {
                    num_symbols: alphabet,
                },
                config.supervised_pseudo_count,
            )?;
            (model, None, count_params_dhmm(m, alphabet)?)
        }
        ModelKind::UnsupervisedDhmm => {
            let train_sym = train_d.as_ref().unwrap();
            let (model, history) = baum_welch(
                train_sym,
                m,
                EmissionKind::Discrete {
                    num_symbols: alphabet,
                },
                &em,
            )?;
            row.final_log_likelihood = Some(history.final_log_likelihood());
            row.ll_trace = Some(history.restarts[history.winner].log_likelihoods.clone());
            let mapping = fit_mapping(&model, train_sym, m)?;
            (model, Some(mapping), count_params_dhmm(m, alphabet)?)
        }
        ModelKind::UnsupervisedChmm => {
            let dim = train
                .dim()
                .ok_or_else(|| Error::invalid("continuous kind requires continuous data"))?;
            let emission = if config.mixture_components == 1 {
                EmissionKind::Gaussian
            } else {
                EmissionKind::GaussianMixture {
                    components: config.mixture_components,
                }
            };
            let (model, history) = baum_welch(&train, m, emission, &em)?;
            row.final_log_likelihood = Some(history.final_log_likelihood());
            row.ll_trace = Some(history.restarts[history.winner].log_likelihoods.clone());
            let mapping = fit_mapping(&model, &train, m)?;
            (
                model,
                Some(mapping),
                count_params_chmm(m, config.mixture_components, dim)?,
            )
        }
    };
    row.n_params = n_params;

    // Decode the held-out sequences and score pooled over all steps.
    let eval_data = match kind {
        ModelKind::UnsupervisedChmm => &test,
        _ => test_d.as_ref().unwrap(),
    };
    let mut true_pooled = Vec::new();
    let mut pred_pooled = Vec::new();
    let test_states = eval_data.states().expect("subset keeps labels");
    for i in 0..eval_data.num_sequences() {
        let (path, _) = model.viterbi(eval_data.seq_view(i))?;
        let path = match &mapping {
            Some(map) => map.apply(&path),
            None => path,
        };
        pred_pooled.extend(path);
        true_pooled.extend(test_states[i].iter().copied());
    }
    row.accuracy_pct = accuracy(&true_pooled, &pred_pooled)?;
    row.wall_ms = start.elapsed().as_millis() as u64;
    Ok(row)
}

/// State mapping fitted on the training split: decode the training
/// sequences and align the predicted labels with the true ones.
fn fit_mapping(
    model: &HmmModel,
    train: &SequenceDataset,
    num_states: usize,
) -> Result<super::StateMapping> {
    let states = train.states().expect("caller checked labels");
    let mut true_pooled = Vec::new();
    let mut pred_pooled = Vec::new();
    for i in 0..train.num_sequences() {
        let (path, _) = model.viterbi(train.seq_view(i))?;
        pred_pooled.extend(path);
        true_pooled.extend(states[i].iter().copied());
    }
    map_states(&true_pooled, &pred_pooled, num_states)
}
