//! Multi-objective evolution of low-rank (LoRA-style) genomes on synthetic
//! multimodal preference landscapes.
//!
//! The crate provides the EvoPref loop (NSGA-II ranking, a grid archive of
//! elites, rank-preserving crossover and 1/5-rule step sizes), comparison
//! baselines under equal evaluation budgets, quality and diversity metrics,
//! and the non-parametric statistics used to compare them.

pub mod adaptation;
pub mod archive;
pub mod baselines;
pub mod genome;
pub mod landscape;
pub mod metrics;
pub mod rng;
pub mod runner;
pub mod selection;
pub mod stats;
pub mod trace;

pub use archive::GridArchive;
pub use genome::LowRankGenome;
pub use landscape::{LandscapeConfig, ObjectiveVector, PreferenceLandscape};
pub use runner::{ExperimentConfig, RunError, RunRecord};
