//! Experiment configuration: JSON file fields, overridden by CLI flags,
//! falling back to defaults. Every random choice is driven by a seed held
//! here; nothing reads ambient entropy.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CmdError;

/// Flat option bag shared by every subcommand. A config file carries any
/// subset of these fields; flags override field by field.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    // Generation
    pub case: Option<String>,
    /// Path to a custom network template (JSON `DbnSpec`).
    pub spec: Option<PathBuf>,
    pub n: Option<usize>,
    pub t: Option<usize>,
    pub d: Option<usize>,
    pub ns: Option<usize>,
    pub nu: Option<usize>,
    pub separation: Option<f64>,

    // Seeds
    pub seed: Option<u64>,
    pub data_seed: Option<u64>,
    pub split_seed: Option<u64>,
    pub train_seed: Option<u64>,

    // Discretization
    pub data: Option<PathBuf>,
    pub mode: Option<String>,
    pub k: Option<usize>,
    pub k_range: Option<Vec<usize>>,
    pub auto: Option<bool>,

    // Training / sweep
    pub kind: Option<String>,
    pub kinds: Option<Vec<String>>,
    pub states: Option<usize>,
    pub symbols: Option<usize>,
    pub mixtures: Option<usize>,
    pub ratios: Option<Vec<f64>>,
    pub max_iters: Option<usize>,
    pub restarts: Option<usize>,
    pub rel_tol: Option<f64>,
    pub pseudo_count: Option<f64>,
    pub model: Option<PathBuf>,
    pub timings: Option<bool>,

    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CmdError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CmdError::Config(format!("bad config {}: {e}", path.display())))
    }

    /// Overlay `other` (CLI flags) on top of `self`: set fields win.
    pub fn overlay(mut self, other: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            case,
            spec,
            n,
            t,
            d,
            ns,
            nu,
            separation,
            seed,
            data_seed,
            split_seed,
            train_seed,
            data,
            mode,
            k,
            k_range,
            auto,
            kind,
            kinds,
            states,
            symbols,
            mixtures,
            ratios,
            max_iters,
            restarts,
            rel_tol,
            pseudo_count,
            model,
            timings,
            out
        );
        self
    }

    /// Seed for data generation; falls back to the master seed, then 0.
    pub fn data_seed(&self) -> u64 {
        self.data_seed.or(self.seed).unwrap_or(0)
    }

    /// Seed for train/test splitting; master seed + 1 when unset.
    pub fn split_seed(&self) -> u64 {
        self.split_seed
            .or(self.seed.map(|s| s.wrapping_add(1)))
            .unwrap_or(1)
    }

    /// Seed for model training; master seed + 2 when unset.
    pub fn train_seed(&self) -> u64 {
        self.train_seed
            .or(self.seed.map(|s| s.wrapping_add(2)))
            .unwrap_or(2)
    }

    pub fn out_dir(&self) -> Result<&Path, CmdError> {
        self.out
            .as_deref()
            .ok_or_else(|| CmdError::Config("missing output directory (--out)".into()))
    }

    pub fn data_dir(&self) -> Result<&Path, CmdError> {
        self.data
            .as_deref()
            .ok_or_else(|| CmdError::Config("missing dataset directory (--data)".into()))
    }
}
