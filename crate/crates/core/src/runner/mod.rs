//! Experiment orchestration: single runs, batteries, sweeps, ablations,
//! persistence and plots.

pub mod battery;
pub mod config;
pub mod evopref;
pub mod plots;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::{cell_index, ArchiveError, ArchiveRecord, OccupancyStats};
use crate::baselines::cmaes::{cmaes_weighted, CmaesParams};
use crate::baselines::gradient::{multistart_gradient, MultiStartParams};
use crate::baselines::moead::{run_moead, MoeadParams};
use crate::baselines::random::random_search;
use crate::baselines::smsemoa::{run_smsemoa, SmsemoaParams};
use crate::baselines::{BaselineError, Outcome, Problem};
use crate::genome::{flat_dim, GenomeError};
use crate::landscape::{LandscapeError, PreferenceLandscape};
use crate::metrics::{mode_coverage, CoverageReport, MetricsError};
use crate::selection::SelectionError;
use crate::stats::StatsError;
use crate::trace::{MetricRow, CSV_HEADER};

pub use battery::{ablation_configs, run_battery, sensitivity_sweep, BatteryReport, SweepReport};
pub use config::{Algorithm, ExperimentConfig};
pub use evopref::{evolve, EvoprefOutcome, EvoprefParams};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("generation {generation}: {message}")]
    AtGeneration { generation: usize, message: String },
    #[error("battery refused: {0}")]
    Battery(String),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("malformed record: {0}")]
    Record(String),
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Io { .. } => 3,
            RunError::Battery(_) => 5,
            RunError::Record(_) => 6,
            _ => 4,
        }
    }
}

/// Everything needed to audit and replay one `(config, seed)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub algorithm: Algorithm,
    pub config_hash: String,
    pub seed: u64,
    pub landscape_seed: u64,
    pub rows: Vec<MetricRow>,
    pub sigma_trajectory: Vec<f64>,
    pub evaluations_used: usize,
    pub wall_clock_secs: f64,
    pub coverage: CoverageReport,
    pub final_hypervolume: f64,
    /// Objective vectors of the final solution set.
    pub final_front: Vec<Vec<f64>>,
    pub occupancy: Option<OccupancyStats>,
    /// Final solution set with genomes, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive: Option<Vec<ArchiveRecord>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub snapshots: BTreeMap<usize, Vec<ArchiveRecord>>,
}

impl RunRecord {
    pub fn final_row(&self) -> &MetricRow {
        self.rows.last().expect("every run logs at least one row")
    }

    pub fn covered_modes(&self) -> usize {
        self.coverage.covered()
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    /// Per-generation coverage recomputed from logged archive snapshots.
    pub fn coverage_curve(&self, landscape: &PreferenceLandscape) -> Result<Vec<usize>, MetricsError> {
        let generations = self.rows.last().map_or(0, |r| r.generation);
        crate::metrics::empirical_coverage_curve(&self.snapshots, generations, landscape)
    }
}

/// Builds the landscape a config describes.
pub fn build_landscape(config: &ExperimentConfig) -> Result<PreferenceLandscape, RunError> {
    let dim = flat_dim(&config.genome.shapes()?);
    Ok(PreferenceLandscape::build(&config.landscape, dim)?)
}

/// The search problem a config poses on `landscape`.
pub fn problem_for<'a>(config: &ExperimentConfig, landscape: &'a PreferenceLandscape) -> Result<Problem<'a>, RunError> {
    Ok(Problem {
        landscape,
        shapes: config.genome.shapes()?,
        alpha: config.genome.alpha,
        sigma_init: config.genome.sigma_init,
    })
}

/// Options that affect what a run keeps, not what it computes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Retain {
    /// Keep the final solution set with genomes.
    pub genomes: bool,
}

fn records_from(outcome: &Outcome, grid: usize) -> Result<Vec<ArchiveRecord>, RunError> {
    outcome
        .solutions
        .iter()
        .map(|s| {
            Ok(ArchiveRecord {
                cell: cell_index(&s.objectives, grid)?,
                objectives: s.objectives.values().to_vec(),
                generation: 0,
                genome: s.genome.to_snapshot(),
            })
        })
        .collect()
}

/// Executes one `(config, seed)` run on a prebuilt landscape.
pub fn execute(
    config: &ExperimentConfig,
    landscape: &PreferenceLandscape,
    seed: u64,
    retain: Retain,
) -> Result<RunRecord, RunError> {
    config.validate()?;
    let started = Instant::now();
    let problem = problem_for(config, landscape)?;
    let budget = config.budget();
    let b = &config.baselines;
    let mut sigma_trajectory = None;
    let mut occupancy = None;
    let mut snapshots = BTreeMap::new();
    let mut archive_records = None;
    let outcome = match config.algorithm {
        Algorithm::Evopref => {
            if budget != config.mu * config.generations {
                return Err(RunError::Config(format!(
                    "evopref spends mu * generations = {} evaluations; budget {budget} differs",
                    config.mu * config.generations
                )));
            }
            let params = EvoprefParams {
                mu: config.mu,
                generations: config.generations,
                grid: config.grid,
                tournament_size: config.tournament_size,
                sigma0: config.sigma0,
                p_c: config.p_c,
                window: config.window,
                no_archive: config.ablation.no_archive,
                no_crossover: config.ablation.no_crossover,
                no_crowding: config.ablation.no_crowding,
                generational: config.ablation.generational,
                snapshot_every: config.snapshot_every,
            };
            let out = evolve(&problem, &params, seed)?;
            sigma_trajectory = Some(out.sigma_trajectory);
            occupancy = out.occupancy;
            snapshots = out.snapshots;
            if retain.genomes {
                archive_records = Some(match &out.archive {
                    Some(a) => a.snapshot(),
                    None => records_from(&out.outcome, config.grid)?,
                });
            }
            out.outcome
        }
        Algorithm::Moead => run_moead(
            &problem,
            MoeadParams {
                subproblems: config.mu,
                neighborhood: b.moead_neighborhood,
                max_replacements: b.moead_replacements,
                sigma: config.sigma0,
            },
            budget,
            seed,
        )?,
        Algorithm::Smsemoa => run_smsemoa(&problem, SmsemoaParams { mu: config.mu, sigma: config.sigma0 }, budget, seed)?,
        Algorithm::Cmaes => {
            let params = CmaesParams {
                lambda: b.cmaes_lambda,
                sigma0: config.sigma0,
                weights: b.weights.clone(),
                covariance: b.cmaes_covariance.into(),
            };
            cmaes_weighted(&problem, &params, budget, seed)?.outcome
        }
        Algorithm::Random => random_search(&problem, &b.weights, budget, config.mu, seed)?.outcome,
        Algorithm::Gradient => {
            let params = MultiStartParams {
                restarts: b.gd_restarts,
                learning_rate: b.gd_learning_rate,
                cosine: b.gd_cosine,
                weights: b.weights.clone(),
            };
            multistart_gradient(&problem, &params, budget, config.mu, seed)?.outcome
        }
    };
    if retain.genomes && archive_records.is_none() {
        archive_records = Some(records_from(&outcome, config.grid)?);
    }
    let coverage = mode_coverage(outcome.genomes(), landscape)?;
    let final_front: Vec<Vec<f64>> = outcome.solutions.iter().map(|s| s.objectives.values().to_vec()).collect();
    let final_hypervolume = crate::trace::origin_hypervolume(&final_front)?;
    let sigma_trajectory = sigma_trajectory.unwrap_or_else(|| outcome.rows.iter().map(|r| r.sigma).collect());
    Ok(RunRecord {
        name: config.label(),
        algorithm: config.algorithm,
        config_hash: config.hash(),
        seed,
        landscape_seed: landscape.seed(),
        rows: outcome.rows,
        sigma_trajectory,
        evaluations_used: outcome.evaluations_used,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        coverage,
        final_hypervolume,
        final_front,
        occupancy,
        archive: archive_records,
        snapshots,
    })
}

/// `evopref_run`-style entry point: builds the landscape and runs one seed.
pub fn run_single(config: &ExperimentConfig, seed: u64, retain: Retain) -> Result<RunRecord, RunError> {
    let landscape = build_landscape(config)?;
    execute(config, &landscape, seed, retain)
}

pub fn create_dir(path: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(path).map_err(|e| RunError::io(path, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    std::fs::write(path, contents).map_err(|e| RunError::io(path, e))
}

/// Writes the per-run artifacts: config echo, JSONL generation log, metric
/// CSV, and (when present) the archive snapshot.
pub fn write_run(dir: &Path, config: &ExperimentConfig, record: &RunRecord) -> Result<(), RunError> {
    create_dir(dir)?;
    let stem = format!("seed_{}", record.seed);
    write_file(&dir.join("config.toml"), config.to_toml())?;
    write_file(&dir.join(format!("{stem}.csv")), record.metrics_csv())?;
    let log_path = dir.join(format!("{stem}.jsonl"));
    let mut log = std::fs::File::create(&log_path).map_err(|e| RunError::io(&log_path, e))?;
    for (row, sigma) in record.rows.iter().zip(&record.sigma_trajectory) {
        let line = serde_json::json!({ "row": row, "sigma": sigma });
        writeln!(log, "{line}").map_err(|e| RunError::io(&log_path, e))?;
    }
    if let Some(archive) = &record.archive {
        let text = serde_json::to_string(archive).map_err(|e| RunError::Record(e.to_string()))?;
        write_file(&dir.join(format!("{stem}_archive.json")), text)?;
    }
    let mut summary = record.clone();
    summary.archive = None;
    let text = serde_json::to_string(&summary).map_err(|e| RunError::Record(e.to_string()))?;
    write_file(&dir.join(format!("{stem}_record.json")), text)?;
    Ok(())
}

/// Reads every `*_record.json` below `dir`.
pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>, RunError> {
    let mut paths = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| RunError::io(&d, e))? {
            let path = entry.map_err(|e| RunError::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.to_string_lossy().ends_with("_record.json") {
                paths.push(path);
            }
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| RunError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| RunError::Record(format!("{}: {e}", p.display())))
        })
        .collect()
}

/// Coverage-bound evaluation at the default setting (`mu = 32`, `T = 50`,
/// `g = 10`, `m = 3`, `k = 50`), with the cell constant `c = 4` and without it.
pub fn theory_report() -> Result<String, RunError> {
    use crate::metrics::coverage_prediction;
    let (mu, t, g, m, k) = (32, 50, 10, 3, 50);
    let with_c = coverage_prediction(mu, t, g, m, 4.0, k)?;
    let without_c = coverage_prediction(mu, t, g, m, 1.0, k)?;
    let exponent = (mu * t) as f64 / (g as f64).powi(m as i32);
    let mut out = String::new();
    out.push_str(&format!("coverage bound k * (1 - exp(-mu*T / (g^m * c))), mu={mu} T={t} g={g} m={m} k={k}\n"));
    out.push_str(&format!(
        "c = 4: exponent {:.4}, covered modes {with_c:.3}, fraction {:.4}\n",
        exponent / 4.0,
        with_c / k as f64
    ));
    out.push_str(&format!(
        "c = 1: exponent {exponent:.4}, covered modes {without_c:.3}, fraction {:.4}\n",
        without_c / k as f64
    ));
    out.push_str(
        "note: the commonly quoted coverage of about 0.80 only follows with the exponent mu*T/g^m (c = 1); \
         with c = 4 the bound gives about 0.33.\n",
    );
    Ok(out)
}
