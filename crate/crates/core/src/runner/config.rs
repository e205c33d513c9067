//! Experiment configuration.
//!
//! Config files are TOML. Keys may be written dotted (`landscape.k = 20`) or
//! under section headers; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunError;
use crate::baselines::cmaes::Covariance;
use crate::baselines::DEFAULT_WEIGHTS;
use crate::genome::{LayerShape, DEFAULT_ALPHA};
use crate::landscape::LandscapeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Evopref,
    Moead,
    Smsemoa,
    Cmaes,
    Random,
    Gradient,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Evopref,
        Algorithm::Moead,
        Algorithm::Smsemoa,
        Algorithm::Cmaes,
        Algorithm::Random,
        Algorithm::Gradient,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Evopref => "evopref",
            Algorithm::Moead => "moead",
            Algorithm::Smsemoa => "smsemoa",
            Algorithm::Cmaes => "cmaes",
            Algorithm::Random => "random",
            Algorithm::Gradient => "gradient",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| RunError::Config(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationFlags {
    pub no_archive: bool,
    pub no_crossover: bool,
    pub no_crowding: bool,
    /// `(mu, mu)` replacement instead of `(mu + mu)`.
    pub generational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenomeConfig {
    /// `[d, k_cols, r]` per layer.
    pub layers: Vec<[usize; 3]>,
    pub alpha: f64,
    pub sigma_init: f64,
}

impl Default for GenomeConfig {
    fn default() -> Self {
        Self { layers: vec![[32, 32, 4]; 2], alpha: DEFAULT_ALPHA, sigma_init: 0.002 }
    }
}

impl GenomeConfig {
    pub fn shapes(&self) -> Result<Vec<LayerShape>, RunError> {
        self.layers
            .iter()
            .map(|&[d, k, r]| LayerShape::new(d, k, r).map_err(|e| RunError::Config(e.to_string())))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Scalarization for CMA-ES, random search and gradient descent.
    pub weights: Vec<f64>,
    pub moead_neighborhood: usize,
    pub moead_replacements: usize,
    pub cmaes_lambda: usize,
    pub cmaes_covariance: CovarianceName,
    pub gd_restarts: usize,
    pub gd_learning_rate: f64,
    pub gd_cosine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceName {
    #[default]
    Separable,
    Full,
}

impl From<CovarianceName> for Covariance {
    fn from(c: CovarianceName) -> Self {
        match c {
            CovarianceName::Separable => Covariance::Separable,
            CovarianceName::Full => Covariance::Full,
        }
    }
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            weights: DEFAULT_WEIGHTS.to_vec(),
            moead_neighborhood: 5,
            moead_replacements: 2,
            cmaes_lambda: 32,
            cmaes_covariance: CovarianceName::Separable,
            gd_restarts: 30,
            gd_learning_rate: 1.6e-4,
            gd_cosine: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Label used in reports; defaults to the algorithm name.
    pub name: Option<String>,
    pub mu: usize,
    pub generations: usize,
    pub grid: usize,
    pub tournament_size: usize,
    pub sigma0: f64,
    pub p_c: f64,
    /// Generations between step-size updates.
    pub window: usize,
    pub seeds: Vec<u64>,
    /// Evaluation budget; `mu * generations` when unset.
    pub budget: Option<usize>,
    pub output_dir: PathBuf,
    /// Archive snapshot interval in generations; only the final archive when unset.
    pub snapshot_every: Option<usize>,
    pub ablation: AblationFlags,
    pub landscape: LandscapeConfig,
    pub genome: GenomeConfig,
    pub baselines: BaselineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Evopref,
            name: None,
            mu: 32,
            generations: 50,
            grid: 10,
            tournament_size: 2,
            sigma0: 0.01,
            p_c: 0.3,
            window: 10,
            seeds: (1..=30).collect(),
            budget: None,
            output_dir: PathBuf::from("runs"),
            snapshot_every: None,
            ablation: AblationFlags::default(),
            landscape: LandscapeConfig::default(),
            genome: GenomeConfig::default(),
            baselines: BaselineConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: Self = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.algorithm.to_string())
    }

    pub fn budget(&self) -> usize {
        self.budget.unwrap_or(self.mu * self.generations)
    }

    /// SHA-256 over the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let fail = |msg: String| Err(RunError::Config(msg));
        if self.mu < 2 {
            return fail(format!("mu must be at least 2, got {}", self.mu));
        }
        if self.grid == 0 {
            return fail("grid must be positive".into());
        }
        if self.tournament_size == 0 {
            return fail("tournament_size must be positive".into());
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return fail(format!("sigma0 must be positive, got {}", self.sigma0));
        }
        if !(0.0..=1.0).contains(&self.p_c) {
            return fail(format!("p_c must be in [0, 1], got {}", self.p_c));
        }
        if self.window == 0 {
            return fail("window must be positive".into());
        }
        if self.seeds.is_empty() {
            return fail("seeds must not be empty".into());
        }
        if self.snapshot_every == Some(0) {
            return fail("snapshot_every must be positive".into());
        }
        if !(self.genome.sigma_init.is_finite() && self.genome.sigma_init > 0.0) {
            return fail(format!("genome.sigma_init must be positive, got {}", self.genome.sigma_init));
        }
        self.genome.shapes()?;
        self.landscape.validate().map_err(|e| RunError::Config(e.to_string()))?;
        if self.baselines.weights.len() != self.landscape.m {
            return fail(format!(
                "baselines.weights has {} entries for {} objectives",
                self.baselines.weights.len(),
                self.landscape.m
            ));
        }
        if self.baselines.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.baselines.weights.iter().sum::<f64>() <= 0.0
        {
            return fail("baselines.weights must be nonnegative with a positive sum".into());
        }
        Ok(())
    }
}
