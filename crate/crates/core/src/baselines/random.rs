//! Random search: independent draws from the initialization distribution.

use std::collections::BTreeSet;

use super::{generation_seed, solution, weighted_sum, BaselineError, BudgetedRun, Outcome, Problem};
use crate::rng::{self, label};
use crate::selection::nondominated_indices;
use crate::trace::{origin_hypervolume, Solution, Tracker};

#[derive(Debug, Clone)]
pub struct RandomSearchOutcome {
    /// Argmax of the weighted sum; the earliest draw wins ties.
    pub best: Solution,
    pub best_fitness: f64,
    /// Every evaluated point, in draw order.
    pub evaluated: Vec<Solution>,
    pub outcome: Outcome,
}

/// Draw `i` uses seed `derive_seed(seed, [BASELINE, i])`, so a larger budget
/// extends the same sample sequence. Draws are evaluated in blocks of
/// `block` sharing one noise realization.
pub fn random_search(
    problem: &Problem,
    weights: &[f64],
    max_evaluations: usize,
    block: usize,
    seed: u64,
) -> Result<RandomSearchOutcome, BaselineError> {
    if max_evaluations == 0 || block == 0 {
        return Err(BaselineError::Budget { budget: max_evaluations, needed: 1 });
    }
    let mut budget = BudgetedRun::new(max_evaluations);
    let mut tracker = Tracker::new(problem.landscape);
    tracker.log_values(0, 0.0, 0, problem.sigma_init, 0);
    let mut evaluated: Vec<Solution> = Vec::with_capacity(max_evaluations);
    let mut covered = BTreeSet::new();
    let mut front: Vec<Vec<f64>> = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    let mut t = 0;
    while budget.remaining() > 0 {
        t += 1;
        let n = block.min(budget.remaining());
        let first = budget.evaluations_used;
        let genomes = (first..first + n)
            .map(|i| problem.sample(rng::derive_seed(seed, &[label::BASELINE, i as u64])))
            .collect::<Result<Vec<_>, _>>()?;
        let objs = problem.evaluate_batch(&genomes, generation_seed(seed, t))?;
        budget.consume(n)?;
        for (g, f) in genomes.into_iter().zip(objs) {
            if let Some(mode) = problem.landscape.mode_of(&g)? {
                covered.insert(mode);
            }
            let fit = weighted_sum(&f, weights);
            if best.is_none_or(|(_, b)| fit > b) {
                best = Some((evaluated.len(), fit));
            }
            front.push(f.values().to_vec());
            evaluated.push(solution(g, f));
        }
        front = nondominated_indices(&front).into_iter().map(|i| front[i].clone()).collect();
        tracker.log_values(t, origin_hypervolume(&front)?, covered.len(), problem.sigma_init, budget.evaluations_used);
    }
    let (index, best_fitness) = best.expect("at least one evaluation");
    Ok(RandomSearchOutcome {
        best: evaluated[index].clone(),
        best_fitness,
        outcome: Outcome {
            rows: tracker.into_rows(),
            solutions: evaluated.clone(),
            evaluations_used: budget.evaluations_used,
        },
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::DEFAULT_WEIGHTS;
    use crate::genome::default_shapes;
    use crate::landscape::{LandscapeConfig, PreferenceLandscape};

    fn landscape() -> PreferenceLandscape {
        PreferenceLandscape::build(&LandscapeConfig { noise_scale: 0.0, ..Default::default() }, 512).unwrap()
    }

    fn problem(l: &PreferenceLandscape) -> Problem<'_> {
        Problem { landscape: l, shapes: default_shapes(), alpha: 32.0, sigma_init: 0.01 }
    }

    #[test]
    fn single_draw() {
        let l = landscape();
        let out = random_search(&problem(&l), &DEFAULT_WEIGHTS, 1, 32, 3).unwrap();
        assert_eq!(out.evaluated.len(), 1);
        assert_eq!(out.best, out.evaluated[0]);
    }

    #[test]
    fn argmax_and_prefix_property() {
        let l = landscape();
        let p = problem(&l);
        let small = random_search(&p, &DEFAULT_WEIGHTS, 100, 32, 5).unwrap();
        let scan = small
            .evaluated
            .iter()
            .map(|s| weighted_sum(&s.objectives, &DEFAULT_WEIGHTS))
            .fold(f64::MIN, f64::max);
        assert_eq!(small.best_fitness, scan);
        assert_eq!(small.outcome.evaluations_used, 100);
        let large = random_search(&p, &DEFAULT_WEIGHTS, 200, 32, 5).unwrap();
        for (a, b) in small.evaluated.iter().zip(&large.evaluated) {
            assert_eq!(a.genome, b.genome);
        }
        assert!(large.best_fitness >= small.best_fitness);
    }
}
