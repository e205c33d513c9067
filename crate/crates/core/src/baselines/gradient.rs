//! Gradient ascent on the smoothed weighted objective, single trajectory and
//! multi-start.
//!
//! This is the desk-scale stand-in for gradient-trained preference baselines:
//! each run follows one trajectory and settles in one basin.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::{generation_seed, solution, BaselineError, BudgetedRun, Outcome, Problem};
use crate::genome::LowRankGenome;
use crate::landscape::PreferenceLandscape;
use crate::rng::{self, label};
use crate::trace::{origin_hypervolume, Solution, Tracker};

#[derive(Debug, Clone)]
pub struct GradientRun {
    pub initial: LowRankGenome,
    pub final_genome: LowRankGenome,
    /// Smoothed weighted objective before the first step and after each step.
    pub trajectory: Vec<f64>,
    pub final_mode: Option<usize>,
}

/// Learning rate at `step` of `steps`, optionally cosine-decayed to zero.
pub fn learning_rate_at(base: f64, step: usize, steps: usize, cosine: bool) -> f64 {
    if !cosine || steps == 0 {
        base
    } else {
        base * 0.5 * (1.0 + (PI * step as f64 / steps as f64).cos())
    }
}

/// Ascent from `start` for `steps` steps.
pub fn gradient_descent_from(
    landscape: &PreferenceLandscape,
    start: &LowRankGenome,
    weights: &[f64],
    steps: usize,
    learning_rate: f64,
    cosine: bool,
) -> Result<GradientRun, BaselineError> {
    if !(learning_rate.is_finite() && learning_rate >= 0.0) {
        return Err(BaselineError::Config(format!("learning rate must be nonnegative, got {learning_rate}")));
    }
    let mut x = start.flatten().to_vec();
    let mut current = start.clone();
    let mut trajectory = vec![landscape.smoothed_weighted(&current, weights)?];
    for step in 0..steps {
        let grad = landscape.weighted_gradient(&current, weights)?;
        let lr = learning_rate_at(learning_rate, step, steps, cosine);
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi += lr * gi;
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(BaselineError::Divergence {
                step,
                detail: format!("parameter {i} became {} (learning rate {lr})", x[i]),
            });
        }
        current = start.unflatten(x.clone())?;
        trajectory.push(landscape.smoothed_weighted(&current, weights)?);
    }
    let final_mode = landscape.mode_of(&current)?;
    Ok(GradientRun { initial: start.clone(), final_genome: current, trajectory, final_mode })
}

/// Single run from a fresh initialization.
pub fn gradient_descent_run(
    problem: &Problem,
    weights: &[f64],
    steps: usize,
    learning_rate: f64,
    cosine: bool,
    seed: u64,
) -> Result<GradientRun, BaselineError> {
    let start = problem.sample(rng::derive_seed(seed, &[label::RESTART]))?;
    gradient_descent_from(problem.landscape, &start, weights, steps, learning_rate, cosine)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartParams {
    pub restarts: usize,
    pub learning_rate: f64,
    pub cosine: bool,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MultiStartOutcome {
    pub runs: Vec<GradientRun>,
    pub outcome: Outcome,
}

/// Evaluations given to each restart: the budget split as evenly as possible,
/// earlier restarts taking the remainder.
pub fn restart_allocation(max_evaluations: usize, restarts: usize) -> Vec<usize> {
    (0..restarts)
        .map(|i| max_evaluations / restarts + usize::from(i < max_evaluations % restarts))
        .collect()
}

/// Independent restarts sharing the budget. A restart with `n` evaluations
/// takes `n - 1` gradient steps (one gradient call each) and spends the last
/// evaluation scoring its final genome. The reported solution set is the final
/// genomes of the restarts completed so far.
pub fn multistart_gradient(
    problem: &Problem,
    params: &MultiStartParams,
    max_evaluations: usize,
    block: usize,
    seed: u64,
) -> Result<MultiStartOutcome, BaselineError> {
    if params.restarts == 0 || block == 0 || max_evaluations < params.restarts {
        return Err(BaselineError::Budget { budget: max_evaluations, needed: params.restarts.max(1) });
    }
    let alloc = restart_allocation(max_evaluations, params.restarts);
    let runs = alloc
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let run_seed = rng::derive_seed(seed, &[label::RESTART, i as u64]);
            gradient_descent_run(problem, &params.weights, n - 1, params.learning_rate, params.cosine, run_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut budget = BudgetedRun::new(max_evaluations);
    let mut finals: Vec<(usize, Solution)> = Vec::with_capacity(runs.len());
    for (run, &n) in runs.iter().zip(&alloc) {
        budget.consume(n)?;
        let index = budget.evaluations_used - 1;
        let f = problem.landscape.evaluate(&run.final_genome, generation_seed(seed, index / block + 1))?;
        finals.push((index, solution(run.final_genome.clone(), f)));
    }

    let mut tracker = Tracker::new(problem.landscape);
    tracker.log_values(0, 0.0, 0, params.learning_rate, 0);
    let blocks = max_evaluations.div_ceil(block);
    for t in 1..=blocks {
        let used = (t * block).min(max_evaluations);
        let done: Vec<&Solution> = finals.iter().filter(|(i, _)| *i < used).map(|(_, s)| s).collect();
        let covered: BTreeSet<usize> = runs
            .iter()
            .zip(&finals)
            .filter(|(_, (i, _))| *i < used)
            .filter_map(|(r, _)| r.final_mode)
            .collect();
        let points: Vec<&[f64]> = done.iter().map(|s| s.objectives.values()).collect();
        tracker.log_values(t, origin_hypervolume(&points)?, covered.len(), params.learning_rate, used);
    }
    Ok(MultiStartOutcome {
        outcome: Outcome {
            rows: tracker.into_rows(),
            solutions: finals.into_iter().map(|(_, s)| s).collect(),
            evaluations_used: budget.evaluations_used,
        },
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::DEFAULT_WEIGHTS;
    use crate::genome::{default_shapes, random_init};
    use crate::landscape::LandscapeConfig;

    fn landscape() -> PreferenceLandscape {
        PreferenceLandscape::build(&LandscapeConfig::default(), 512).unwrap()
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let l = landscape();
        let p = Problem { landscape: &l, shapes: default_shapes(), alpha: 32.0, sigma_init: 0.01 };
        let run = gradient_descent_run(&p, &DEFAULT_WEIGHTS, 20, 0.0, false, 1).unwrap();
        assert_eq!(run.final_genome.flatten(), run.initial.flatten());
    }

    #[test]
    fn stays_in_basin_from_center() {
        let l = landscape();
        let template = random_init(&default_shapes(), 0.01, 32.0, 0).unwrap();
        for i in 0..l.k() {
            let start = l.preimage(&template, &l.modes()[i].center).unwrap();
            let run = gradient_descent_from(&l, &start, &DEFAULT_WEIGHTS, 50, 1e-4, false).unwrap();
            assert_eq!(run.final_mode, Some(i));
        }
    }

    #[test]
    fn divergence_is_reported() {
        let l = landscape();
        let template = random_init(&default_shapes(), 0.01, 32.0, 0).unwrap();
        let mut target = l.modes()[0].center.clone();
        target[0] += 0.3;
        let near = l.preimage(&template, &target).unwrap();
        let err = gradient_descent_from(&l, &near, &DEFAULT_WEIGHTS, 200, f64::MAX, false);
        assert!(matches!(err, Err(BaselineError::Divergence { .. })), "{err:?}");
    }

    #[test]
    fn allocation_sums_to_budget() {
        let a = restart_allocation(1600, 30);
        assert_eq!(a.iter().sum::<usize>(), 1600);
        assert_eq!(a.iter().filter(|&&n| n == 54).count(), 10);
        assert_eq!(a.iter().filter(|&&n| n == 53).count(), 20);
    }

    #[test]
    fn cosine_schedule() {
        assert_eq!(learning_rate_at(0.1, 0, 10, true), 0.1);
        assert!(learning_rate_at(0.1, 10, 10, true).abs() < 1e-15);
        assert_eq!(learning_rate_at(0.1, 7, 10, false), 0.1);
    }
}
