//! The five subcommands.

use hmmbench_core::dataset::{ObsData, SequenceDataset};
use hmmbench_core::dbn::{build_case_spec, random_cpds, sample_dataset, CaseOverrides, DbnSpec};
use hmmbench_core::discretize::{
    discretize_per_slice, discretize_pooled, select_k_elbow, select_k_silhouette, CodebookMode,
    KMeansConfig,
};
use hmmbench_core::eval::{accuracy, map_states, run_sweep, ModelKind, SweepConfig};
use hmmbench_core::hmm::{
    baum_welch, fit_supervised, EmTrainConfig, EmissionKind, HmmModel, ModelDocument, ModelMeta,
};

use crate::config::ExperimentConfig;
use crate::manifest::write_manifest;
use crate::CmdError;

fn data_err(e: hmmbench_core::Error) -> CmdError {
    CmdError::Data(e)
}

fn parse_mode(config: &ExperimentConfig) -> Result<CodebookMode, CmdError> {
    match config.mode.as_deref().unwrap_or("pooled") {
        "pooled" => Ok(CodebookMode::Pooled),
        "per-slice" => Ok(CodebookMode::PerSlice),
        other => Err(CmdError::Config(format!(
            "unknown discretization mode {other:?}; expected pooled or per-slice"
        ))),
    }
}

fn em_config(config: &ExperimentConfig) -> EmTrainConfig {
    let mut em = EmTrainConfig {
        seed: config.train_seed(),
        ..Default::default()
    };
    if let Some(v) = config.max_iters {
        em.max_iters = v;
    }
    if let Some(v) = config.restarts {
        em.num_restarts = v;
    }
    if let Some(v) = config.rel_tol {
        em.rel_tol = v;
    }
    em
}

fn load_dataset(config: &ExperimentConfig) -> Result<SequenceDataset, CmdError> {
    SequenceDataset::read_dir(config.data_dir()?).map_err(data_err)
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

pub fn cmd_generate(config: &ExperimentConfig, quiet: bool) -> Result<(), CmdError> {
    let out = config.out_dir()?.to_path_buf();
    let mut spec: DbnSpec = if let Some(path) = &config.spec {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Config(format!("cannot read spec {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CmdError::Config(format!("bad spec {}: {e}", path.display())))?
    } else {
        let case = config
            .case
            .as_deref()
            .ok_or_else(|| CmdError::Config("missing --case (or --spec)".into()))?
            .parse()
            .map_err(|e| CmdError::Config(format!("{e}")))?;
        build_case_spec(
            case,
            &CaseOverrides {
                t: config.t,
                d: config.d,
                ns: config.ns,
                nu: config.nu,
            },
        )
        .map_err(|e| CmdError::Config(format!("{e}")))?
    };

    let n = config.n.unwrap_or(2000);
    let separation = config.separation.unwrap_or(4.0);
    let data_seed = config.data_seed();
    if spec.cpds.is_none() {
        spec.cpds = Some(random_cpds(&spec, data_seed, separation).map_err(data_err)?);
    }
    // Distinct stream for sampling so it does not share draws with the CPDs.
    let dataset = sample_dataset(&spec, n, data_seed.wrapping_add(0x5EED)).map_err(data_err)?;

    dataset.write_dir(&out).map_err(data_err)?;
    write_manifest(&out, "generate", config)?;

    if !quiet {
        println!(
            "generated {} sequences: T={} D={} Ns={}",
            n,
            spec.t_len,
            spec.obs_dim(),
            spec.state_cardinality
        );
        print_state_means(&dataset);
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn print_state_means(dataset: &SequenceDataset) {
    let (Some(states), ObsData::Continuous(obs)) = (dataset.states(), dataset.obs()) else {
        return;
    };
    let d = dataset.dim().unwrap_or(0);
    let ns = dataset.num_state_labels().unwrap_or(0);
    let mut sums = vec![vec![0.0; d]; ns];
    let mut counts = vec![0usize; ns];
    for (seq, labels) in obs.iter().zip(states) {
        for (x, &s) in seq.iter().zip(labels) {
            counts[s] += 1;
            for (acc, &v) in sums[s].iter_mut().zip(x) {
                *acc += v;
            }
        }
    }
    for s in 0..ns {
        let means: Vec<String> = sums[s]
            .iter()
            .map(|&v| format!("{:.3}", v / counts[s].max(1) as f64))
            .collect();
        println!("state {s}: n={} obs mean [{}]", counts[s], means.join(", "));
    }
}

// ---------------------------------------------------------------------------
// discretize
// ---------------------------------------------------------------------------

pub fn cmd_discretize(config: &ExperimentConfig, quiet: bool) -> Result<(), CmdError> {
    let out = config.out_dir()?.to_path_buf();
    let mode = parse_mode(config)?;
    if !config.auto.unwrap_or(false) && config.k.is_none() {
        return Err(CmdError::Config("missing --k (or --auto)".into()));
    }
    let dataset = load_dataset(config)?;
    let seed = config.data_seed();

    let k = if config.auto.unwrap_or(false) {
        let range = config.k_range.clone().unwrap_or_else(|| (2..=8).collect());
        let points = dataset.pooled_points().map_err(data_err)?;
        let km = KMeansConfig {
            seed,
            ..Default::default()
        };
        let silhouette = select_k_silhouette(&points, &range, &km).map_err(data_err)?;
        // The elbow needs at least 3 candidates; report it when possible.
        let elbow_msg = if range.len() >= 3 {
            let elbow = select_k_elbow(&points, &range, &km).map_err(data_err)?;
            format!("elbow k={}", elbow.chosen_k)
        } else {
            "elbow: not enough candidates".to_string()
        };
        if !quiet {
            println!(
                "auto-selected k={} (silhouette; {})",
                silhouette.chosen_k, elbow_msg
            );
        }
        silhouette.chosen_k
    } else {
        config.k.expect("checked above")
    };

    let km = KMeansConfig {
        k,
        seed,
        ..Default::default()
    };
    let (symbolic, codebook) = match mode {
        CodebookMode::Pooled => discretize_pooled(&dataset, &km).map_err(data_err)?,
        CodebookMode::PerSlice => discretize_per_slice(&dataset, &[k], &km).map_err(data_err)?,
    };

    symbolic.write_dir(&out).map_err(data_err)?;
    codebook
        .write_file(&out.join("codebook.json"))
        .map_err(data_err)?;
    write_manifest(&out, "discretize", config)?;
    if !quiet {
        println!(
            "discretized {} sequences to an alphabet of {}",
            symbolic.num_sequences(),
            symbolic.alphabet().unwrap_or(k)
        );
        println!("wrote {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

fn parse_kind(config: &ExperimentConfig) -> Result<ModelKind, CmdError> {
    config
        .kind
        .as_deref()
        .ok_or_else(|| CmdError::Config("missing --kind".into()))?
        .parse()
        .map_err(|e| CmdError::Config(format!("{e}")))
}

pub fn cmd_train(config: &ExperimentConfig, quiet: bool) -> Result<(), CmdError> {
    let out = config.out_dir()?.to_path_buf();
    let kind = parse_kind(config)?;
    let dataset = load_dataset(config)?;
    let states = config
        .states
        .or_else(|| dataset.num_state_labels())
        .ok_or_else(|| CmdError::Config("missing --states and dataset carries no labels".into()))?;

    let em = em_config(config);
    let mut meta = ModelMeta::default();
    let mut history_json = None;

    let model: HmmModel = match kind {
        ModelKind::SupervisedDhmm => {
            let symbols = config
                .symbols
                .or_else(|| dataset.alphabet())
                .ok_or_else(|| CmdError::Config("missing --symbols for a discrete model".into()))?;
            let pseudo = config.pseudo_count.unwrap_or(1.0);
            fit_supervised(
                &dataset,
                states,
                EmissionKind::Discrete {
                    num_symbols: symbols,
                },
                pseudo,
            )
            .map_err(data_err)?
        }
        ModelKind::UnsupervisedDhmm => {
            let symbols = config
                .symbols
                .or_else(|| dataset.alphabet())
                .ok_or_else(|| CmdError::Config("missing --symbols for a discrete model".into()))?;
            let (model, history) = baum_welch(
                &dataset,
                states,
                EmissionKind::Discrete {
                    num_symbols: symbols,
                },
                &em,
            )
            .map_err(data_err)?;
            meta.final_log_likelihood = Some(history.final_log_likelihood());
            history_json = Some(history_to_json(&history));
            model
        }
        ModelKind::UnsupervisedChmm => {
            let mixtures = config.mixtures.unwrap_or(1);
            let emission = if mixtures == 1 {
                EmissionKind::Gaussian
            } else {
                EmissionKind::GaussianMixture {
                    components: mixtures,
                }
            };
            let (model, history) = baum_welch(&dataset, states, emission, &em).map_err(data_err)?;
            meta.final_log_likelihood = Some(history.final_log_likelihood());
            history_json = Some(history_to_json(&history));
            model
        }
    };

    meta.training = Some(serde_json::json!({
        "kind": kind.to_string(),
        "states": states,
        "em": em,
        "pseudo_count": config.pseudo_count,
    }));

    std::fs::create_dir_all(&out).map_err(|e| CmdError::Data(hmmbench_core::Error::io(&out, e)))?;
    ModelDocument::with_meta(model, meta)
        .write_file(&out.join("model.json"))
        .map_err(data_err)?;
    if let Some(history) = history_json {
        let path = out.join("history.json");
        std::fs::write(&path, history)
            .map_err(|e| CmdError::Data(hmmbench_core::Error::io(path, e)))?;
    }
    write_manifest(&out, "train", config)?;
    if !quiet {
        println!(
            "trained {kind} with {states} states; wrote {}",
            out.display()
        );
    }
    Ok(())
}

fn history_to_json(history: &hmmbench_core::hmm::TrainingHistory) -> String {
    let restarts: Vec<serde_json::Value> = history
        .restarts
        .iter()
        .map(|r| {
            serde_json::json!({
                "log_likelihoods": r.log_likelihoods,
                "rerandomized": r.rerandomized,
            })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "winner": history.winner,
        "restarts": restarts,
    }))
    .expect("history serializes")
        + "\n"
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

pub fn cmd_eval(config: &ExperimentConfig, quiet: bool) -> Result<(), CmdError> {
    let dataset = load_dataset(config)?;
    let model_path = config
        .model
        .as_deref()
        .ok_or_else(|| CmdError::Config("missing --model".into()))?;
    let doc = ModelDocument::read_file(model_path).map_err(data_err)?;
    let states = dataset
        .states()
        .ok_or_else(|| data_err(hmmbench_core::Error::invalid("dataset has no state labels")))?;
    let m = doc.model.num_states();

    let trained_unsupervised = doc
        .meta
        .training
        .as_ref()
        .and_then(|t| t.get("kind"))
        .and_then(|k| k.as_str())
        .is_some_and(|k| k.starts_with("unsupervised"));

    let mut true_pooled = Vec::new();
    let mut pred_pooled = Vec::new();
    for i in 0..dataset.num_sequences() {
        let (path, _) = doc.model.viterbi(dataset.seq_view(i)).map_err(data_err)?;
        pred_pooled.extend(path);
        true_pooled.extend(states[i].iter().copied());
    }

    let acc = if trained_unsupervised {
        let mapping = map_states(&true_pooled, &pred_pooled, m).map_err(data_err)?;
        if !quiet {
            println!("state mapping: {:?}", mapping.permutation);
        }
        mapping.accuracy_pct
    } else {
        accuracy(&true_pooled, &pred_pooled).map_err(data_err)?
    };
    println!("accuracy: {acc:.2}");
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn cmd_sweep(config: &ExperimentConfig, quiet: bool) -> Result<(), CmdError> {
    let out = config.out_dir()?.to_path_buf();
    let kinds: Vec<ModelKind> = match &config.kinds {
        Some(list) => list
            .iter()
            .map(|s| s.parse().map_err(|e| CmdError::Config(format!("{e}"))))
            .collect::<Result<_, _>>()?,
        None => vec![
            ModelKind::SupervisedDhmm,
            ModelKind::UnsupervisedDhmm,
            ModelKind::UnsupervisedChmm,
        ],
    };
    let dataset = load_dataset(config)?;
    let states = config
        .states
        .or_else(|| dataset.num_state_labels())
        .ok_or_else(|| CmdError::Config("missing --states and dataset carries no labels".into()))?;

    let sweep_config = SweepConfig {
        training_ratios: config
            .ratios
            .clone()
            .unwrap_or_else(|| vec![0.8, 0.3, 0.1, 0.005, 0.001]),
        kinds,
        num_states: states,
        symbols: config.symbols.unwrap_or(states),
        discretize_mode: parse_mode(config)?,
        mixture_components: config.mixtures.unwrap_or(1),
        em: em_config(config),
        supervised_pseudo_count: config.pseudo_count.unwrap_or(1.0),
        split_seed: config.split_seed(),
    };

    let result = run_sweep(&dataset, &sweep_config).map_err(data_err)?;

    std::fs::create_dir_all(&out).map_err(|e| CmdError::Data(hmmbench_core::Error::io(&out, e)))?;

    // Timing is nondeterministic; keep it out of the files unless asked,
    // so identical configs rewrite identical bytes.
    let mut file_copy = result.clone();
    if !config.timings.unwrap_or(false) {
        for row in &mut file_copy.rows {
            row.wall_ms = 0;
        }
    }
    let csv_path = out.join("results.csv");
    std::fs::write(&csv_path, file_copy.to_csv())
        .map_err(|e| CmdError::Data(hmmbench_core::Error::io(csv_path, e)))?;
    let md_path = out.join("results.md");
    std::fs::write(&md_path, file_copy.to_markdown())
        .map_err(|e| CmdError::Data(hmmbench_core::Error::io(md_path, e)))?;
    write_manifest(&out, "sweep", config)?;

    if !quiet {
        println!("{}", result.to_markdown());
        let total_ms: u64 = result.rows.iter().map(|r| r.wall_ms).sum();
        println!("total training+decoding time: {total_ms} ms");
        println!("wrote {}", out.display());
    }
    Ok(())
}
