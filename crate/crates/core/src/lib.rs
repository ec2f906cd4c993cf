//! Sequence modeling with hidden Markov models, plus the tooling around
//! them: synthetic time-series generation from dynamic-Bayesian-network
//! templates, observation discretization with cluster-count selection, and
//! a train/test benchmark harness that sweeps the training ratio.
//!
//! Everything is deterministic given explicit seeds; no operation draws
//! from ambient randomness.

pub mod dataset;
pub mod dbn;
pub mod discretize;
pub mod error;
pub mod eval;
pub mod hmm;
pub mod rng;

pub use dataset::{ObsData, Provenance, SequenceDataset};
pub use error::{Error, Result};
