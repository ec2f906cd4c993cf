//! Machine-readable record of one command invocation, sufficient to
//! reproduce its outputs byte for byte.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CmdError;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    package_version: &'a str,
    seeds: Seeds,
    config_sha256: String,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct Seeds {
    data: u64,
    split: u64,
    train: u64,
}

/// Write `run_manifest.json` into `dir`.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
) -> Result<(), CmdError> {
    let config_json = serde_json::to_string(config)
        .map_err(|e| CmdError::Config(format!("config not serializable: {e}")))?;
    let mut hasher = Sha256::new();
    hasher.update(config_json.as_bytes());
    let digest = hasher.finalize();
    let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();

    let manifest = Manifest {
        command,
        package_version: env!("CARGO_PKG_VERSION"),
        seeds: Seeds {
            data: config.data_seed(),
            split: config.split_seed(),
            train: config.train_seed(),
        },
        config_sha256,
        config,
    };
    let path = dir.join("run_manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CmdError::Config(format!("manifest not serializable: {e}")))?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| CmdError::Data(hmmbench_core::Error::io(path, e)))
}
