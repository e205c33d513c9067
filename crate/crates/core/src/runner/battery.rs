//! Multi-seed batteries, comparison reports, parameter sweeps and ablations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::{build_landscape, execute, write_file, write_run, Retain, RunError, RunRecord};
use crate::stats::{friedman_test, holm_correction, median_iqr, vargha_delaney_a12, wilcoxon_signed_rank, EffectSize, FriedmanResult, Summary, WilcoxonResult};

/// Metrics compared across algorithms, by name.
pub const METRICS: [&str; 2] = ["coverage", "hypervolume"];

fn metric_value(record: &RunRecord, metric: &str) -> f64 {
    match metric {
        "coverage" => record.covered_modes() as f64,
        "hypervolume" => record.final_hypervolume,
        _ => unreachable!("unknown metric {metric}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoSummary {
    pub name: String,
    pub runs: usize,
    pub covered_modes: Summary,
    pub coverage_fraction: Summary,
    pub hypervolume: Summary,
    /// Fraction of runs whose final set is collapsed.
    pub collapse_rate: f64,
    pub evaluations_used: Vec<usize>,
    /// Median archive cells per covered mode, for archive-bearing runs.
    pub cells_per_mode: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: String,
    pub reference: String,
    pub other: String,
    pub wilcoxon: WilcoxonResult,
    pub adjusted_p: f64,
    pub effect: EffectSize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryReport {
    pub names: Vec<String>,
    pub seeds: Vec<u64>,
    pub reference: String,
    pub summaries: Vec<AlgoSummary>,
    /// Friedman test per metric, when at least three algorithms ran.
    pub friedman: BTreeMap<String, FriedmanResult>,
    pub comparisons: Vec<Comparison>,
    /// Every algorithm used the same number of evaluations on every seed.
    pub equal_budget: bool,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

impl BatteryReport {
    pub fn records_for<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a RunRecord> + 'a {
        self.records.iter().filter(move |r| r.name == name)
    }

    pub fn summary(&self, name: &str) -> Option<&AlgoSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }

    pub fn comparison(&self, metric: &str, other: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.metric == metric && c.other == other)
    }

    /// Values of `metric` for `name`, in seed order.
    pub fn values(&self, name: &str, metric: &str) -> Vec<f64> {
        self.records_for(name).map(|r| metric_value(r, metric)).collect()
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "name,runs,covered_median,covered_q1,covered_q3,coverage_fraction_median,hypervolume_median,hypervolume_q1,hypervolume_q3,collapse_rate\n",
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                s.name,
                s.runs,
                s.covered_modes.median,
                s.covered_modes.q1,
                s.covered_modes.q3,
                s.coverage_fraction.median,
                s.hypervolume.median,
                s.hypervolume.q1,
                s.hypervolume.q3,
                s.collapse_rate
            );
        }
        out
    }

    /// Comparison table: comparison, p-value, adjusted p, A12, magnitude.
    pub fn comparisons_csv(&self) -> String {
        let mut out = String::from("metric,comparison,p_value,adjusted_p,a12,magnitude\n");
        for c in &self.comparisons {
            let _ = writeln!(
                out,
                "{},{} vs {},{:?},{:?},{:?},{}",
                c.metric,
                c.reference,
                c.other,
                c.wilcoxon.p_value,
                c.adjusted_p,
                c.effect.a12,
                c.effect.magnitude.as_str()
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Battery: {} algorithms x {} seeds", self.names.len(), self.seeds.len());
        let _ = writeln!(out, "Coverage is mode coverage on the synthetic landscape.");
        let _ = writeln!(out, "Equal evaluation budget: {}", if self.equal_budget { "yes" } else { "NO" });
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<16} {:>22} {:>26} {:>9}",
            "algorithm", "modes median [IQR]", "hypervolume median [IQR]", "collapse"
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{:<16} {:>8.1} [{:>5.1}, {:>5.1}] {:>10.4} [{:.4}, {:.4}] {:>8.0}%",
                s.name,
                s.covered_modes.median,
                s.covered_modes.q1,
                s.covered_modes.q3,
                s.hypervolume.median,
                s.hypervolume.q1,
                s.hypervolume.q3,
                100.0 * s.collapse_rate
            );
        }
        for (metric, f) in &self.friedman {
            let _ = writeln!(
                out,
                "\nFriedman ({metric}): chi2({}, N={}) = {:.2}, p = {:.3e}",
                f.df,
                self.seeds.len(),
                f.statistic,
                f.p_value
            );
        }
        if !self.comparisons.is_empty() {
            let _ = writeln!(out, "\n{:<12} {:<32} {:>10} {:>10} {:>6} {:>10}", "metric", "comparison", "p", "adj. p", "A12", "magnitude");
            for c in &self.comparisons {
                let _ = writeln!(
                    out,
                    "{:<12} {:<32} {:>10.3e} {:>10.3e} {:>6.3} {:>10}{}",
                    c.metric,
                    format!("{} vs {}", c.reference, c.other),
                    c.wilcoxon.p_value,
                    c.adjusted_p,
                    c.effect.a12,
                    c.effect.magnitude.as_str(),
                    if c.wilcoxon.degenerate { " (identical)" } else { "" }
                );
            }
        }
        out
    }
}

/// Checks that configs can be compared seed by seed.
fn check_pairable(configs: &[ExperimentConfig]) -> Result<(), RunError> {
    let Some(first) = configs.first() else {
        return Err(RunError::Battery("no configurations given".into()));
    };
    let mut names = std::collections::BTreeSet::new();
    for c in configs {
        if c.landscape != first.landscape || c.genome.layers != first.genome.layers {
            return Err(RunError::Battery(format!(
                "'{}' uses a different landscape (seed {}) than '{}' (seed {}); paired comparisons need the same problem instance",
                c.label(),
                c.landscape.seed,
                first.label(),
                first.landscape.seed
            )));
        }
        if c.seeds != first.seeds {
            return Err(RunError::Battery(format!("'{}' uses a different seed list than '{}'", c.label(), first.label())));
        }
        if !names.insert(c.label()) {
            return Err(RunError::Battery(format!("duplicate configuration name '{}'", c.label())));
        }
    }
    Ok(())
}

/// Runs every `(config, seed)` pair and builds the comparison report.
/// `reference` names the configuration the others are compared against
/// (the first one when `None`).
pub fn run_battery(configs: &[ExperimentConfig], reference: Option<&str>) -> Result<BatteryReport, RunError> {
    check_pairable(configs)?;
    for c in configs {
        c.validate()?;
    }
    let landscape = build_landscape(&configs[0])?;
    let seeds = configs[0].seeds.clone();
    let pairs: Vec<(&ExperimentConfig, u64)> = configs.iter().flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let records = pairs
        .par_iter()
        .map(|(c, s)| execute(c, &landscape, *s, Retain::default()))
        .collect::<Result<Vec<_>, _>>()?;
    let names: Vec<String> = configs.iter().map(ExperimentConfig::label).collect();
    report_from_records(records, &names, reference)
}

/// Builds a report from stored records. Records are grouped by name in the
/// order of `names` and paired by seed.
pub fn report_from_records(records: Vec<RunRecord>, names: &[String], reference: Option<&str>) -> Result<BatteryReport, RunError> {
    if names.is_empty() {
        return Err(RunError::Battery("no runs to report on".into()));
    }
    let reference = reference.map_or_else(|| names[0].clone(), str::to_string);
    if !names.contains(&reference) {
        return Err(RunError::Battery(format!("reference '{reference}' is not among {names:?}")));
    }
    let mut grouped: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in &records {
        grouped.entry(r.name.as_str()).or_default().push(r);
    }
    for group in grouped.values_mut() {
        group.sort_by_key(|r| r.seed);
    }
    let seeds: Vec<u64> = grouped
        .get(names[0].as_str())
        .map(|g| g.iter().map(|r| r.seed).collect())
        .unwrap_or_default();
    for n in names {
        let g = grouped
            .get(n.as_str())
            .ok_or_else(|| RunError::Battery(format!("no records for '{n}'")))?;
        let s: Vec<u64> = g.iter().map(|r| r.seed).collect();
        if s != seeds {
            return Err(RunError::Battery(format!("'{n}' ran seeds {s:?}, expected {seeds:?}")));
        }
        if g.iter().any(|r| r.landscape_seed != g[0].landscape_seed) || g[0].landscape_seed != grouped[names[0].as_str()][0].landscape_seed {
            return Err(RunError::Battery(format!("'{n}' was run on a different landscape seed")));
        }
    }

    let mut summaries = Vec::new();
    for n in names {
        let g = &grouped[n.as_str()];
        let covered: Vec<f64> = g.iter().map(|r| r.covered_modes() as f64).collect();
        let fraction: Vec<f64> = g.iter().map(|r| r.coverage.coverage_fraction).collect();
        let hv: Vec<f64> = g.iter().map(|r| r.final_hypervolume).collect();
        let cells: Vec<f64> = g
            .iter()
            .filter_map(|r| r.occupancy.as_ref().and_then(|o| o.cells_per_covered_mode()))
            .collect();
        summaries.push(AlgoSummary {
            name: n.clone(),
            runs: g.len(),
            covered_modes: median_iqr(&covered)?,
            coverage_fraction: median_iqr(&fraction)?,
            hypervolume: median_iqr(&hv)?,
            collapse_rate: g.iter().filter(|r| r.coverage.collapsed).count() as f64 / g.len() as f64,
            evaluations_used: g.iter().map(|r| r.evaluations_used).collect(),
            cells_per_mode: if cells.is_empty() { None } else { Some(median_iqr(&cells)?.median) },
        });
    }
    let equal_budget = summaries.iter().all(|s| s.evaluations_used == summaries[0].evaluations_used);

    let mut friedman = BTreeMap::new();
    let mut comparisons = Vec::new();
    if names.len() >= 2 {
        for metric in METRICS {
            let column = |n: &str| -> Vec<f64> { grouped[n].iter().map(|r| metric_value(r, metric)).collect() };
            if names.len() >= 3 && seeds.len() >= 2 {
                let cols: Vec<Vec<f64>> = names.iter().map(|n| column(n)).collect();
                let matrix: Vec<Vec<f64>> = (0..seeds.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
                friedman.insert(metric.to_string(), friedman_test(&matrix)?);
            }
            let base = column(&reference);
            let mut block = Vec::new();
            for n in names.iter().filter(|n| **n != reference) {
                let other = column(n);
                block.push((n.clone(), wilcoxon_signed_rank(&base, &other)?, vargha_delaney_a12(&base, &other)?));
            }
            let raw: Vec<f64> = block.iter().map(|(_, w, _)| w.p_value).collect();
            let adjusted = holm_correction(&raw)?;
            for ((other, wilcoxon, effect), adjusted_p) in block.into_iter().zip(adjusted) {
                comparisons.push(Comparison {
                    metric: metric.to_string(),
                    reference: reference.clone(),
                    other,
                    wilcoxon,
                    adjusted_p,
                    effect,
                });
            }
        }
    }
    let mut ordered = Vec::with_capacity(records.len());
    for n in names {
        ordered.extend(grouped[n.as_str()].iter().map(|r| (*r).clone()));
    }
    Ok(BatteryReport {
        names: names.to_vec(),
        seeds,
        reference,
        summaries,
        friedman,
        comparisons,
        equal_budget,
        records: ordered,
    })
}

/// Writes per-run artifacts under `dir/<name>/` and the report files in `dir`.
pub fn write_battery(dir: &Path, configs: &[ExperimentConfig], report: &BatteryReport) -> Result<(), RunError> {
    for c in configs {
        let sub = dir.join(c.label());
        for r in report.records_for(&c.label()) {
            write_run(&sub, c, r)?;
        }
    }
    write_file(&dir.join("summary.csv"), report.summary_csv())?;
    write_file(&dir.join("comparisons.csv"), report.comparisons_csv())?;
    write_file(&dir.join("report.txt"), report.to_text())?;
    let json = serde_json::to_string_pretty(report).map_err(|e| RunError::Record(e.to_string()))?;
    write_file(&dir.join("report.json"), json)
}

/// Parameters a sensitivity sweep may vary.
pub const SWEEP_PARAMETERS: [&str; 4] = ["sigma0", "p_c", "g", "tournament_size"];

/// Runs per sweep setting.
pub const SWEEP_SEEDS: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub parameter: String,
    pub values: Vec<f64>,
    /// Index of the value equal to the base configuration's, if any.
    pub default_index: Option<usize>,
    /// Median final coverage (percent of modes) per value.
    pub median_coverage_pct: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter");
        for (i, v) in self.values.iter().enumerate() {
            let mark = if Some(i) == self.default_index { "*" } else { "" };
            let _ = write!(out, ",{v}{mark}");
        }
        out.push('\n');
        out.push_str(&self.parameter);
        for c in &self.median_coverage_pct {
            let _ = write!(out, ",{c:?}");
        }
        out.push('\n');
        out
    }
}

fn with_parameter(base: &ExperimentConfig, parameter: &str, value: f64) -> Result<ExperimentConfig, RunError> {
    let mut c = base.clone();
    let as_count = |v: f64| -> Result<usize, RunError> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(RunError::Config(format!("{parameter} needs a positive integer, got {v}")))
        }
    };
    match parameter {
        "sigma0" => c.sigma0 = value,
        "p_c" => c.p_c = value,
        "g" => c.grid = as_count(value)?,
        "tournament_size" => c.tournament_size = as_count(value)?,
        other => {
            return Err(RunError::Config(format!(
                "unknown sweep parameter '{other}'; expected one of {SWEEP_PARAMETERS:?}"
            )))
        }
    }
    c.name = Some(format!("{parameter}={value}"));
    c.validate()?;
    Ok(c)
}

fn parameter_value(base: &ExperimentConfig, parameter: &str) -> f64 {
    match parameter {
        "sigma0" => base.sigma0,
        "p_c" => base.p_c,
        "g" => base.grid as f64,
        _ => base.tournament_size as f64,
    }
}

/// Median coverage for each value of `parameter`, over the first 15 seeds of `base`.
pub fn sensitivity_sweep(base: &ExperimentConfig, parameter: &str, values: &[f64]) -> Result<SweepReport, RunError> {
    if values.is_empty() {
        return Err(RunError::Config("sweep needs at least one value".into()));
    }
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| {
            let mut c = with_parameter(base, parameter, v)?;
            c.seeds.truncate(SWEEP_SEEDS);
            Ok(c)
        })
        .collect::<Result<_, RunError>>()?;
    let landscape = build_landscape(base)?;
    let seeds = configs[0].seeds.clone();
    let pairs: Vec<(usize, u64)> = (0..configs.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let coverage: Vec<(usize, f64)> = pairs
        .par_iter()
        .map(|&(i, s)| execute(&configs[i], &landscape, s, Retain::default()).map(|r| (i, r.coverage.coverage_fraction)))
        .collect::<Result<_, _>>()?;
    let median_coverage_pct = (0..configs.len())
        .map(|i| {
            let v: Vec<f64> = coverage.iter().filter(|(j, _)| *j == i).map(|(_, c)| 100.0 * c).collect();
            Ok(median_iqr(&v)?.median)
        })
        .collect::<Result<_, RunError>>()?;
    let default = parameter_value(base, parameter);
    Ok(SweepReport {
        parameter: parameter.to_string(),
        values: values.to_vec(),
        default_index: values.iter().position(|v| *v == default),
        median_coverage_pct,
        seeds,
    })
}

/// Names of the ablation variants, in report order.
pub const ABLATIONS: [&str; 7] = ["full", "no_archive", "no_crossover", "no_crowding", "mu8", "mu64", "random"];

/// The ablation variants of `base`, all at `base`'s evaluation budget.
pub fn ablation_configs(base: &ExperimentConfig, which: &[&str]) -> Result<Vec<ExperimentConfig>, RunError> {
    let budget = base.budget();
    which
        .iter()
        .map(|&name| {
            let mut c = base.clone();
            c.algorithm = Algorithm::Evopref;
            c.ablation = Default::default();
            c.budget = None;
            match name {
                "full" => {}
                "no_archive" => c.ablation.no_archive = true,
                "no_crossover" => c.ablation.no_crossover = true,
                "no_crowding" => c.ablation.no_crowding = true,
                "generational" => c.ablation.generational = true,
                "mu8" | "mu64" => {
                    c.mu = if name == "mu8" { 8 } else { 64 };
                    if !budget.is_multiple_of(c.mu) {
                        return Err(RunError::Config(format!("budget {budget} is not a multiple of mu={}", c.mu)));
                    }
                    c.generations = budget / c.mu;
                }
                "random" => {
                    c.algorithm = Algorithm::Random;
                    c.budget = Some(budget);
                }
                other => return Err(RunError::Config(format!("unknown ablation '{other}'"))),
            }
            c.name = Some(name.to_string());
            Ok(c)
        })
        .collect()
}
