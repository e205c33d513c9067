//! Per-generation metric rows shared by every algorithm.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::genome::LowRankGenome;
use crate::landscape::{ObjectiveVector, PreferenceLandscape};
use crate::metrics::{hypervolume, MetricsError};
use crate::selection::nondominated_indices;

/// A genome with the objective vector it was evaluated to.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub genome: Arc<LowRankGenome>,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub generation: usize,
    pub hypervolume: f64,
    pub covered_modes: usize,
    pub coverage_fraction: f64,
    pub sigma: f64,
    pub evaluations_used: usize,
}

pub const CSV_HEADER: &str = "generation,hypervolume,covered_modes,coverage_fraction,sigma,evaluations_used";

impl MetricRow {
    /// Shortest round-trip formatting, so equal rows give equal bytes.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:?},{},{:?},{:?},{}",
            self.generation,
            self.hypervolume,
            self.covered_modes,
            self.coverage_fraction,
            self.sigma,
            self.evaluations_used
        )
    }
}

/// Hypervolume against the origin, computed on the non-dominated subset.
pub fn origin_hypervolume<V: AsRef<[f64]>>(points: &[V]) -> Result<f64, MetricsError> {
    let Some(first) = points.first() else {
        return Ok(0.0);
    };
    let m = first.as_ref().len();
    let nd: Vec<&[f64]> = nondominated_indices(points)
        .into_iter()
        .map(|i| points[i].as_ref())
        .collect();
    hypervolume(&nd, &vec![0.0; m])
}

/// Accumulates metric rows for one run.
#[derive(Debug)]
pub struct Tracker<'a> {
    landscape: &'a PreferenceLandscape,
    rows: Vec<MetricRow>,
}

impl<'a> Tracker<'a> {
    pub fn new(landscape: &'a PreferenceLandscape) -> Self {
        Self { landscape, rows: Vec::new() }
    }

    pub fn landscape(&self) -> &'a PreferenceLandscape {
        self.landscape
    }

    /// Logs a row for the solution set `solutions`.
    pub fn log<'s, I>(&mut self, generation: usize, solutions: I, sigma: f64, evaluations_used: usize) -> Result<(), MetricsError>
    where
        I: IntoIterator<Item = (&'s LowRankGenome, &'s ObjectiveVector)>,
    {
        let mut covered = BTreeSet::new();
        let mut points = Vec::new();
        for (g, f) in solutions {
            if let Some(i) = self.landscape.mode_of(g)? {
                covered.insert(i);
            }
            points.push(f.values());
        }
        let hv = origin_hypervolume(&points)?;
        self.log_values(generation, hv, covered.len(), sigma, evaluations_used);
        Ok(())
    }

    /// Logs a row from precomputed values.
    pub fn log_values(&mut self, generation: usize, hypervolume: f64, covered_modes: usize, sigma: f64, evaluations_used: usize) {
        let k = self.landscape.k();
        self.rows.push(MetricRow {
            generation,
            hypervolume,
            covered_modes,
            coverage_fraction: covered_modes as f64 / k as f64,
            sigma,
            evaluations_used,
        });
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<MetricRow> {
        self.rows
    }
}
