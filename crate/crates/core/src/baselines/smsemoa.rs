//! Steady-state SMS-EMOA: one offspring per step, the worst front loses its
//! smallest hypervolume contributor.

use super::{generation_seed, solution, BaselineError, BudgetedRun, Outcome, Problem};
use crate::genome::gaussian_mutate;
use crate::metrics::{hypervolume, MetricsError};
use crate::rng::{self, label};
use crate::selection::{binary_tournament, fast_nondominated_sort, RankedPopulation};
use crate::trace::{Solution, Tracker};

#[derive(Debug, Clone, PartialEq)]
pub struct SmsemoaParams {
    pub mu: usize,
    pub sigma: f64,
}

impl Default for SmsemoaParams {
    fn default() -> Self {
        Self { mu: 32, sigma: 0.01 }
    }
}

/// `HV(front) - HV(front without i)` for each member, against `reference`.
pub fn hv_contributions<V: AsRef<[f64]>>(front: &[V], reference: &[f64]) -> Result<Vec<f64>, MetricsError> {
    let total = hypervolume(front, reference)?;
    (0..front.len())
        .map(|i| {
            let rest: Vec<&[f64]> = front
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p.as_ref())
                .collect();
            Ok((total - hypervolume(&rest, reference)?).max(0.0))
        })
        .collect()
}

/// Index (into `objs`) of the member to discard: smallest contribution in the
/// last front, lowest index on ties.
pub fn removal_index<V: AsRef<[f64]>>(objs: &[V]) -> Result<usize, MetricsError> {
    let fronts = fast_nondominated_sort(objs);
    let worst = fronts.last().expect("non-empty population");
    if worst.len() == 1 {
        return Ok(worst[0]);
    }
    let m = objs[worst[0]].as_ref().len();
    let members: Vec<&[f64]> = worst.iter().map(|&i| objs[i].as_ref()).collect();
    let contrib = hv_contributions(&members, &vec![0.0; m])?;
    let mut best = 0;
    for (i, c) in contrib.iter().enumerate() {
        if *c < contrib[best] {
            best = i;
        }
    }
    Ok(worst[best])
}

#[derive(Debug, Clone)]
pub struct SmsemoaState {
    pub population: Vec<Solution>,
    pub params: SmsemoaParams,
}

/// One steady-state step: tournament, mutation, evaluation, reduction.
pub fn smsemoa_step(
    state: &mut SmsemoaState,
    problem: &Problem,
    gen_seed: u64,
    step_seed: u64,
) -> Result<(), BaselineError> {
    let objs: Vec<&[f64]> = state.population.iter().map(|s| s.objectives.values()).collect();
    let ranked = RankedPopulation::new(&objs);
    let mut rng = rng::stream(step_seed, &[label::VARIATION]);
    let parent = binary_tournament(&ranked, &mut rng)?;
    let child = gaussian_mutate(
        &state.population[parent].genome,
        state.params.sigma,
        rng::derive_seed(step_seed, &[label::MUTATE]),
    )?;
    let f = problem.landscape.evaluate(&child, gen_seed)?;
    state.population.push(solution(child, f));
    let objs: Vec<&[f64]> = state.population.iter().map(|s| s.objectives.values()).collect();
    let drop = removal_index(&objs)?;
    state.population.remove(drop);
    Ok(())
}

pub fn run_smsemoa(problem: &Problem, params: SmsemoaParams, max_evaluations: usize, seed: u64) -> Result<Outcome, BaselineError> {
    let mu = params.mu;
    if mu == 0 || max_evaluations < mu {
        return Err(BaselineError::Budget { budget: max_evaluations, needed: mu.max(1) });
    }
    let sigma = params.sigma;
    let mut budget = BudgetedRun::new(max_evaluations);
    let mut tracker = Tracker::new(problem.landscape);
    tracker.log_values(0, 0.0, 0, sigma, 0);

    let genomes = (0..mu)
        .map(|i| problem.sample(rng::derive_seed(seed, &[label::INIT, i as u64])))
        .collect::<Result<Vec<_>, _>>()?;
    let objs = problem.evaluate_batch(&genomes, generation_seed(seed, 1))?;
    budget.consume(mu)?;
    let mut state = SmsemoaState {
        population: genomes.into_iter().zip(objs).map(|(g, f)| solution(g, f)).collect(),
        params,
    };
    let log = |tracker: &mut Tracker, state: &SmsemoaState, t: usize, used: usize| {
        tracker.log(t, state.population.iter().map(|s| (s.genome.as_ref(), &s.objectives)), sigma, used)
    };
    log(&mut tracker, &state, 1, budget.evaluations_used)?;

    let mut step = 0usize;
    while budget.remaining() > 0 {
        // Steps are grouped in blocks of mu sharing one noise draw.
        let t = 2 + step / mu;
        let step_seed = rng::derive_seed(seed, &[label::BASELINE, step as u64]);
        smsemoa_step(&mut state, problem, generation_seed(seed, t), step_seed)?;
        budget.consume(1)?;
        step += 1;
        if step.is_multiple_of(mu) || budget.remaining() == 0 {
            log(&mut tracker, &state, t, budget.evaluations_used)?;
        }
    }
    Ok(Outcome {
        rows: tracker.into_rows(),
        solutions: state.population,
        evaluations_used: budget.evaluations_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::hypervolume;
    use proptest::prelude::*;

    #[test]
    fn dominated_newcomer_removed() {
        let objs = vec![vec![0.9, 0.2], vec![0.2, 0.9], vec![0.6, 0.6], vec![0.1, 0.1]];
        assert_eq!(removal_index(&objs).unwrap(), 3);
    }

    #[test]
    fn contributions_on_small_front() {
        let front = vec![vec![1.0, 0.5], vec![0.5, 1.0], vec![0.9, 0.9]];
        let c = hv_contributions(&front, &[0.0, 0.0]).unwrap();
        // Oracle: brute force over subsets with inclusion-exclusion on three boxes.
        let area = |pts: &[&Vec<f64>]| -> f64 {
            let mut total = 0.0;
            for mask in 1u32..(1 << pts.len()) {
                let mut corner = [f64::INFINITY; 2];
                for (i, p) in pts.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        corner[0] = corner[0].min(p[0]);
                        corner[1] = corner[1].min(p[1]);
                    }
                }
                let v = corner[0] * corner[1];
                total += if mask.count_ones() % 2 == 1 { v } else { -v };
            }
            total
        };
        let all: Vec<&Vec<f64>> = front.iter().collect();
        for i in 0..3 {
            let rest: Vec<&Vec<f64>> = front.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p).collect();
            assert!((c[i] - (area(&all) - area(&rest))).abs() < 1e-12);
        }
        // (1,0.5): 0.1*0.5 = 0.05; (0.5,1): 0.05; (0.9,0.9): 0.4*0.4 = 0.16.
        assert!((c[0] - 0.05).abs() < 1e-12 && (c[2] - 0.16).abs() < 1e-12);
        assert!(removal_index(&front).unwrap() < 2);
    }

    #[test]
    fn duplicates_go_first() {
        let objs = vec![vec![0.9, 0.2], vec![0.5, 0.5], vec![0.2, 0.9], vec![0.5, 0.5]];
        let drop = removal_index(&objs).unwrap();
        assert!(drop == 1 || drop == 3);
    }

    proptest! {
        #[test]
        fn removal_keeps_hv_when_child_enters_first_front(
            pop in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 4..12),
            child in prop::collection::vec(0.0f64..1.0, 3),
        ) {
            let before = hypervolume(&pop, &[0.0; 3]).unwrap();
            let mut all = pop.clone();
            all.push(child);
            let first = &fast_nondominated_sort(&all)[0];
            prop_assume!(first.contains(&(all.len() - 1)));
            let drop = removal_index(&all).unwrap();
            all.remove(drop);
            prop_assert!(hypervolume(&all, &[0.0; 3]).unwrap() >= before - 1e-12);
        }
    }
}
