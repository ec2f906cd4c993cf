//! `hmmbench`: reproducible sequence-model benchmarks from the command line.
//!
//! Subcommands: `generate` synthetic labeled time series from a network
//! template, `discretize` continuous observations into symbols, `train` a
//! single model, `eval` a trained model against a labeled dataset, and
//! `sweep` a full training-ratio study.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data error,
//! 4 numerical failure.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Data(hmmbench_core::Error),
}

impl CmdError {
    fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Data(hmmbench_core::Error::Underflow { .. }) => 4,
            CmdError::Data(_) => 3,
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Config(msg) => write!(f, "{msg}"),
            CmdError::Data(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "hmmbench", version, about = "Sequence-model benchmark runner")]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed: data seed, split seed + 1, training seed + 2.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a labeled synthetic dataset from a network template.
    Generate(GenerateArgs),
    /// Quantize continuous observations into symbols with a k-means codebook.
    Discretize(DiscretizeArgs),
    /// Fit one model to a dataset.
    Train(TrainArgs),
    /// Score a trained model on a labeled dataset.
    Eval(EvalArgs),
    /// Run the training-ratio sweep and tabulate the results.
    Sweep(SweepArgs),
}

#[derive(Args, Default)]
struct GenerateArgs {
    /// Benchmark topology: I, II, III, or IV.
    #[arg(long)]
    case: Option<String>,
    /// Custom network template file (JSON), instead of --case.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Number of sequences.
    #[arg(long)]
    n: Option<usize>,
    /// Sequence length override.
    #[arg(long)]
    t: Option<usize>,
    /// Observation-node count override.
    #[arg(long)]
    d: Option<usize>,
    /// State cardinality override.
    #[arg(long)]
    ns: Option<usize>,
    /// Input cardinality override.
    #[arg(long)]
    nu: Option<usize>,
    /// State-conditional mean spacing, in standard deviations.
    #[arg(long)]
    separation: Option<f64>,
}

#[derive(Args, Default)]
struct DiscretizeArgs {
    /// Dataset directory to quantize.
    #[arg(long)]
    data: Option<PathBuf>,
    /// pooled or per-slice.
    #[arg(long)]
    mode: Option<String>,
    /// Codebook size.
    #[arg(long)]
    k: Option<usize>,
    /// Select k automatically (silhouette, elbow reported alongside).
    #[arg(long)]
    auto: bool,
    /// Candidate k values for --auto, e.g. 2..8 or 2,3,5.
    #[arg(long)]
    k_range: Option<KRange>,
}

/// Candidate list parsed from "2..8" or "2,3,5".
#[derive(Clone, Debug)]
struct KRange(Vec<usize>);

impl std::str::FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((lo, hi)) = s.split_once("..") {
            let lo: usize = lo
                .trim()
                .parse()
                .map_err(|e| format!("bad range start: {e}"))?;
            let hi: usize = hi
                .trim()
                .parse()
                .map_err(|e| format!("bad range end: {e}"))?;
            if lo > hi {
                return Err("range start exceeds end".into());
            }
            Ok(KRange((lo..=hi).collect()))
        } else {
            s.split(',')
                .map(|p| {
                    p.trim()
                        .parse()
                        .map_err(|e| format!("bad value {p:?}: {e}"))
                })
                .collect::<Result<Vec<usize>, String>>()
                .map(KRange)
        }
    }
}

#[derive(Args, Default)]
struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// supervised-dhmm, unsupervised-dhmm, or unsupervised-chmm.
    #[arg(long)]
    kind: Option<String>,
    /// Number of hidden states.
    #[arg(long)]
    states: Option<usize>,
    /// Symbol alphabet size for discrete models.
    #[arg(long)]
    symbols: Option<usize>,
    /// Mixture components for the continuous model.
    #[arg(long)]
    mixtures: Option<usize>,
    /// EM iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// EM restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// EM relative-improvement stopping threshold.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Additive smoothing for supervised counting.
    #[arg(long)]
    pseudo_count: Option<f64>,
}

#[derive(Args, Default)]
struct EvalArgs {
    /// Labeled dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args, Default)]
struct SweepArgs {
    /// Labeled dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Training ratios, descending.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Model kinds to run.
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<String>>,
    /// Number of hidden states.
    #[arg(long)]
    states: Option<usize>,
    /// Symbol alphabet for the discrete kinds.
    #[arg(long)]
    symbols: Option<usize>,
    /// Mixture components for the continuous kind.
    #[arg(long)]
    mixtures: Option<usize>,
    /// pooled or per-slice codebooks for the discrete kinds.
    #[arg(long)]
    mode: Option<String>,
    /// EM iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// EM restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// EM relative-improvement stopping threshold.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Additive smoothing for supervised counting.
    #[arg(long)]
    pseudo_count: Option<f64>,
    /// Train/test split seed.
    #[arg(long)]
    split_seed: Option<u64>,
    /// Training seed.
    #[arg(long)]
    train_seed: Option<u64>,
    /// Record measured wall times in results.csv (breaks byte-identical reruns).
    #[arg(long)]
    timings: bool,
}

fn flags_to_config(cli: &Cli) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        seed: cli.seed,
        out: cli.out.clone(),
        ..Default::default()
    };
    match &cli.command {
        Command::Generate(a) => {
            c.case = a.case.clone();
            c.spec = a.spec.clone();
            c.n = a.n;
            c.t = a.t;
            c.d = a.d;
            c.ns = a.ns;
            c.nu = a.nu;
            c.separation = a.separation;
        }
        Command::Discretize(a) => {
            c.data = a.data.clone();
            c.mode = a.mode.clone();
            c.k = a.k;
            c.auto = a.auto.then_some(true);
            c.k_range = a.k_range.clone().map(|r| r.0);
        }
        Command::Train(a) => {
            c.data = a.data.clone();
            c.kind = a.kind.clone();
            c.states = a.states;
            c.symbols = a.symbols;
            c.mixtures = a.mixtures;
            c.max_iters = a.max_iters;
            c.restarts = a.restarts;
            c.rel_tol = a.rel_tol;
            c.pseudo_count = a.pseudo_count;
        }
        Command::Eval(a) => {
            c.data = a.data.clone();
            c.model = a.model.clone();
        }
        Command::Sweep(a) => {
            c.data = a.data.clone();
            c.ratios = a.ratios.clone();
            c.kinds = a.kinds.clone();
            c.states = a.states;
            c.symbols = a.symbols;
            c.mixtures = a.mixtures;
            c.mode = a.mode.clone();
            c.max_iters = a.max_iters;
            c.restarts = a.restarts;
            c.rel_tol = a.rel_tol;
            c.pseudo_count = a.pseudo_count;
            c.split_seed = a.split_seed;
            c.train_seed = a.train_seed;
            c.timings = a.timings.then_some(true);
        }
    }
    c
}

fn run(cli: &Cli) -> Result<(), CmdError> {
    let file_config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let config = file_config.overlay(flags_to_config(cli));
    match &cli.command {
        Command::Generate(_) => commands::cmd_generate(&config, cli.quiet),
        Command::Discretize(_) => commands::cmd_discretize(&config, cli.quiet),
        Command::Train(_) => commands::cmd_train(&config, cli.quiet),
        Command::Eval(_) => commands::cmd_eval(&config, cli.quiet),
        Command::Sweep(_) => commands::cmd_sweep(&config, cli.quiet),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
