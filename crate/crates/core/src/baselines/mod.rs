//! Comparison algorithms run under the same evaluation budget as EvoPref.

pub mod cmaes;
pub mod gradient;
pub mod moead;
pub mod random;
pub mod smsemoa;

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::genome::{random_init, GenomeError, LayerShape, LowRankGenome};
use crate::landscape::{LandscapeError, ObjectiveVector, PreferenceLandscape};
use crate::metrics::MetricsError;
use crate::rng::{self, label};
use crate::selection::SelectionError;
use crate::trace::{MetricRow, Solution};

/// Scalarization weights used by the weighted-sum baselines.
pub const DEFAULT_WEIGHTS: [f64; 3] = [0.4, 0.3, 0.3];

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("budget of {budget} evaluations is below the minimum of {needed}")]
    Budget { budget: usize, needed: usize },
    #[error("evaluation budget exhausted ({used} of {max})")]
    Exhausted { used: usize, max: usize },
    #[error("gradient descent diverged at step {step}: {detail}")]
    Divergence { step: usize, detail: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// The search space and fitness function shared by all algorithms.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub landscape: &'a PreferenceLandscape,
    pub shapes: Vec<LayerShape>,
    pub alpha: f64,
    pub sigma_init: f64,
}

impl Problem<'_> {
    /// Fresh genome from the initialization distribution.
    pub fn sample(&self, seed: u64) -> Result<LowRankGenome, GenomeError> {
        random_init(&self.shapes, self.sigma_init, self.alpha, seed)
    }

    /// Evaluates a batch under one common noise draw, in parallel; output order matches input.
    pub fn evaluate_batch<G>(&self, genomes: &[G], gen_seed: u64) -> Result<Vec<ObjectiveVector>, LandscapeError>
    where
        G: AsRef<LowRankGenome> + Sync,
    {
        let noise = self.landscape.noise(gen_seed);
        genomes
            .par_iter()
            .map(|g| {
                let z = self.landscape.features(g.as_ref())?;
                Ok(self.landscape.evaluate_features(&z, &noise))
            })
            .collect()
    }
}

/// Seed of the common noise draw for generation `t` of run `seed`.
pub fn generation_seed(seed: u64, t: usize) -> u64 {
    rng::derive_seed(seed, &[label::GENERATION, t as u64])
}

pub fn weighted_sum(f: &[f64], weights: &[f64]) -> f64 {
    f.iter().zip(weights).map(|(a, b)| a * b).sum()
}

/// Evaluation counter with a hard ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetedRun {
    pub max_evaluations: usize,
    pub evaluations_used: usize,
}

impl BudgetedRun {
    pub fn new(max_evaluations: usize) -> Self {
        Self { max_evaluations, evaluations_used: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.max_evaluations - self.evaluations_used
    }

    pub fn consume(&mut self, n: usize) -> Result<(), BaselineError> {
        if n > self.remaining() {
            return Err(BaselineError::Exhausted {
                used: self.evaluations_used,
                max: self.max_evaluations,
            });
        }
        self.evaluations_used += n;
        Ok(())
    }
}

/// What every algorithm hands back to the runner.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: Vec<MetricRow>,
    /// The set coverage and hypervolume are reported on.
    pub solutions: Vec<Solution>,
    pub evaluations_used: usize,
}

impl Outcome {
    pub fn genomes(&self) -> impl Iterator<Item = &LowRankGenome> {
        self.solutions.iter().map(|s| s.genome.as_ref())
    }
}

/// Weight vectors on the probability simplex with Euclidean neighbourhoods.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVectorSet {
    pub vectors: Vec<Vec<f64>>,
    pub neighborhoods: Vec<Vec<usize>>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// All `m`-vectors with entries in `{0, 1/h, ..., 1}` summing to 1.
pub fn simplex_lattice(m: usize, h: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, h: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == m {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / h as f64).collect());
            prefix.pop();
            return;
        }
        for c in (0..=left).rev() {
            prefix.push(c);
            rec(m, left - c, h, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m == 1 {
        return vec![vec![1.0]];
    }
    rec(m, h, h, &mut Vec::new(), &mut out);
    out
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl WeightVectorSet {
    /// `n` vectors: the smallest simplex lattice with at least `n` points, thinned
    /// greedily. Each removal keeps the minimum pairwise distance as large as
    /// possible, then leaves the fewest pairs at that distance, then drops the
    /// lowest index.
    pub fn uniform(n: usize, m: usize, t_nb: usize) -> Result<Self, BaselineError> {
        if n == 0 || m == 0 {
            return Err(BaselineError::Config("need at least one weight vector and one objective".into()));
        }
        if t_nb == 0 || t_nb > n {
            return Err(BaselineError::Config(format!("neighbourhood size {t_nb} must be in 1..={n}")));
        }
        let mut h = 1;
        while m > 1 && binomial(h + m - 1, m - 1) < n {
            h += 1;
        }
        let mut vectors = simplex_lattice(m, h);
        let tol = 1e-12;
        while vectors.len() > n {
            let mut best: Option<(usize, f64, usize)> = None;
            for drop in 0..vectors.len() {
                let mut min = f64::INFINITY;
                let mut count = 0;
                for i in 0..vectors.len() {
                    for j in i + 1..vectors.len() {
                        if i == drop || j == drop {
                            continue;
                        }
                        let d = dist(&vectors[i], &vectors[j]);
                        if d < min - tol {
                            min = d;
                            count = 1;
                        } else if (d - min).abs() <= tol {
                            count += 1;
                        }
                    }
                }
                let better = match best {
                    None => true,
                    Some((_, bmin, bcount)) => min > bmin + tol || ((min - bmin).abs() <= tol && count < bcount),
                };
                if better {
                    best = Some((drop, min, count));
                }
            }
            vectors.remove(best.expect("at least two vectors").0);
        }
        let neighborhoods = (0..vectors.len())
            .map(|i| {
                let mut order: Vec<usize> = (0..vectors.len()).collect();
                order.sort_by(|&a, &b| {
                    dist(&vectors[i], &vectors[a])
                        .total_cmp(&dist(&vectors[i], &vectors[b]))
                        .then(a.cmp(&b))
                });
                order.truncate(t_nb);
                order
            })
            .collect();
        Ok(Self { vectors, neighborhoods })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Shared handle used when solutions are stored in several places.
pub(crate) fn solution(genome: LowRankGenome, objectives: ObjectiveVector) -> Solution {
    Solution { genome: Arc::new(genome), objectives }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_sizes() {
        assert_eq!(simplex_lattice(3, 6).len(), 28);
        assert_eq!(simplex_lattice(3, 7).len(), 36);
        assert_eq!(simplex_lattice(2, 4).len(), 5);
        for v in simplex_lattice(3, 7) {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thirty_two_vectors() {
        let w = WeightVectorSet::uniform(32, 3, 5).unwrap();
        assert_eq!(w.len(), 32);
        for v in &w.vectors {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(v.iter().all(|x| *x >= 0.0));
        }
        for (i, nb) in w.neighborhoods.iter().enumerate() {
            assert_eq!(nb.len(), 5);
            assert_eq!(nb[0], i);
        }
        // The corners survive thinning.
        for corner in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            assert!(w.vectors.iter().any(|v| v.as_slice() == corner));
        }
        assert_eq!(w, WeightVectorSet::uniform(32, 3, 5).unwrap());
    }

    #[test]
    fn budget_ceiling() {
        let mut b = BudgetedRun::new(10);
        b.consume(6).unwrap();
        assert!(b.consume(5).is_err());
        b.consume(4).unwrap();
        assert_eq!(b.remaining(), 0);
    }
}
