//! MOEA/D with Tchebycheff aggregation.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{generation_seed, solution, BaselineError, BudgetedRun, Outcome, Problem, WeightVectorSet};
use crate::genome::{gaussian_mutate, rank_preserving_crossover, sample_gamma};
use crate::rng::{self, label};
use crate::trace::{Solution, Tracker};

#[derive(Debug, Clone, PartialEq)]
pub struct MoeadParams {
    pub subproblems: usize,
    pub neighborhood: usize,
    pub max_replacements: usize,
    pub sigma: f64,
}

impl Default for MoeadParams {
    fn default() -> Self {
        Self { subproblems: 32, neighborhood: 5, max_replacements: 2, sigma: 0.01 }
    }
}

/// `max_j lambda_j * |z*_j - f_j|`; smaller is better.
pub fn tchebycheff(f: &[f64], lambda: &[f64], z_star: &[f64]) -> f64 {
    f.iter()
        .zip(lambda)
        .zip(z_star)
        .map(|((fj, lj), zj)| lj * (zj - fj).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct MoeadState {
    pub weights: WeightVectorSet,
    pub incumbents: Vec<Solution>,
    /// Componentwise best objective values seen.
    pub z_star: Vec<f64>,
    pub params: MoeadParams,
}

impl MoeadState {
    /// State over given incumbents; `z*` starts at their componentwise maximum.
    pub fn new(weights: WeightVectorSet, incumbents: Vec<Solution>, params: MoeadParams) -> Result<Self, BaselineError> {
        if weights.len() != incumbents.len() || incumbents.is_empty() {
            return Err(BaselineError::Config(format!(
                "{} weight vectors for {} incumbents",
                weights.len(),
                incumbents.len()
            )));
        }
        let m = incumbents[0].objectives.len();
        let mut z_star = vec![f64::NEG_INFINITY; m];
        for s in &incumbents {
            for (z, f) in z_star.iter_mut().zip(s.objectives.iter()) {
                *z = z.max(*f);
            }
        }
        Ok(Self { weights, incumbents, z_star, params })
    }

    /// Random initial incumbents, evaluated under generation 1's noise.
    pub fn init(problem: &Problem, params: MoeadParams, seed: u64) -> Result<Self, BaselineError> {
        let weights = WeightVectorSet::uniform(params.subproblems, problem.landscape.m(), params.neighborhood)?;
        let genomes = (0..params.subproblems)
            .map(|i| problem.sample(rng::derive_seed(seed, &[label::INIT, i as u64])))
            .collect::<Result<Vec<_>, _>>()?;
        let objs = problem.evaluate_batch(&genomes, generation_seed(seed, 1))?;
        let incumbents = genomes.into_iter().zip(objs).map(|(g, f)| solution(g, f)).collect();
        Self::new(weights, incumbents, params)
    }

    pub fn update_reference(&mut self, f: &[f64]) {
        for (z, v) in self.z_star.iter_mut().zip(f) {
            *z = z.max(*v);
        }
    }

    /// Offers `child` to the neighbourhood of subproblem `sub`, visiting neighbours
    /// in random order. Returns the replaced subproblems.
    pub fn offer<R: Rng>(&mut self, sub: usize, child: &Solution, rng: &mut R) -> Vec<usize> {
        let mut order = self.weights.neighborhoods[sub].clone();
        order.shuffle(rng);
        let mut replaced = Vec::new();
        for j in order {
            if replaced.len() == self.params.max_replacements {
                break;
            }
            let lambda = &self.weights.vectors[j];
            let new = tchebycheff(&child.objectives, lambda, &self.z_star);
            let old = tchebycheff(&self.incumbents[j].objectives, lambda, &self.z_star);
            if new < old {
                self.incumbents[j] = child.clone();
                replaced.push(j);
            }
        }
        replaced
    }
}

/// One pass over the first `limit` subproblems. Returns evaluations spent.
pub fn moead_step(
    state: &mut MoeadState,
    problem: &Problem,
    gen_seed: u64,
    step_seed: u64,
    limit: usize,
) -> Result<usize, BaselineError> {
    let mut rng = rng::stream(step_seed, &[label::VARIATION]);
    let n = limit.min(state.incumbents.len());
    for i in 0..n {
        let nb = &state.weights.neighborhoods[i];
        let (a, b) = if nb.len() >= 2 {
            let picks: Vec<usize> = nb.choose_multiple(&mut rng, 2).copied().collect();
            (picks[0], picks[1])
        } else {
            (nb[0], nb[0])
        };
        let gamma = sample_gamma(rng::derive_seed(step_seed, &[label::GAMMA, i as u64]));
        let mixed = rank_preserving_crossover(&state.incumbents[a].genome, &state.incumbents[b].genome, gamma)?;
        let child = gaussian_mutate(&mixed, state.params.sigma, rng::derive_seed(step_seed, &[label::MUTATE, i as u64]))?;
        let f = problem.landscape.evaluate(&child, gen_seed)?;
        state.update_reference(&f);
        let child = solution(child, f);
        state.offer(i, &child, &mut rng);
    }
    Ok(n)
}

/// Full run; one metric row per pass over the subproblems.
pub fn run_moead(problem: &Problem, params: MoeadParams, max_evaluations: usize, seed: u64) -> Result<Outcome, BaselineError> {
    let n = params.subproblems;
    if max_evaluations < n {
        return Err(BaselineError::Budget { budget: max_evaluations, needed: n });
    }
    let sigma = params.sigma;
    let mut budget = BudgetedRun::new(max_evaluations);
    let mut tracker = Tracker::new(problem.landscape);
    tracker.log_values(0, 0.0, 0, sigma, 0);
    let mut state = MoeadState::init(problem, params, seed)?;
    budget.consume(n)?;
    let log = |tracker: &mut Tracker, state: &MoeadState, t: usize, used: usize| {
        tracker.log(t, state.incumbents.iter().map(|s| (s.genome.as_ref(), &s.objectives)), sigma, used)
    };
    log(&mut tracker, &state, 1, budget.evaluations_used)?;
    let mut t = 1;
    while budget.remaining() > 0 {
        t += 1;
        let step_seed = rng::derive_seed(seed, &[label::BASELINE, t as u64]);
        let spent = moead_step(&mut state, problem, generation_seed(seed, t), step_seed, budget.remaining())?;
        budget.consume(spent)?;
        log(&mut tracker, &state, t, budget.evaluations_used)?;
    }
    Ok(Outcome {
        rows: tracker.into_rows(),
        solutions: state.incumbents,
        evaluations_used: budget.evaluations_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{random_init, LayerShape};
    use crate::landscape::ObjectiveVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn sol(f: &[f64], seed: u64) -> Solution {
        let g = random_init(&[LayerShape::new(2, 2, 1).unwrap()], 0.1, 1.0, seed).unwrap();
        Solution { genome: Arc::new(g), objectives: ObjectiveVector::new(f.to_vec()).unwrap() }
    }

    fn two_subproblems(incumbents: [&[f64]; 2], z: &[f64]) -> MoeadState {
        let weights = WeightVectorSet {
            vectors: vec![vec![0.8, 0.2], vec![0.2, 0.8]],
            neighborhoods: vec![vec![0, 1], vec![1, 0]],
        };
        let params = MoeadParams { subproblems: 2, neighborhood: 2, max_replacements: 2, sigma: 0.01 };
        let mut s = MoeadState::new(weights, vec![sol(incumbents[0], 1), sol(incumbents[1], 2)], params).unwrap();
        s.z_star = z.to_vec();
        s
    }

    #[test]
    fn tchebycheff_degenerate_weight() {
        assert_eq!(tchebycheff(&[0.3, 0.9], &[1.0, 0.0], &[1.0, 1.0]), 0.7);
        assert_eq!(tchebycheff(&[1.0, 1.0], &[0.5, 0.5], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn equal_child_replaces_nothing() {
        let mut s = two_subproblems([&[0.5, 0.5], &[0.5, 0.5]], &[1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(s.offer(0, &sol(&[0.5, 0.5], 3), &mut rng).is_empty());
    }

    #[test]
    fn hand_table() {
        // z* = (1, 1).
        // incumbent 0 = (0.9, 0.2): g0 = max(0.8*0.1, 0.2*0.8) = 0.16, g1 = max(0.2*0.1, 0.8*0.8) = 0.64
        // incumbent 1 = (0.3, 0.9): g1 = max(0.2*0.7, 0.8*0.1) = 0.14
        // child (0.7, 0.7):         g0 = max(0.24, 0.06) = 0.24, g1 = max(0.06, 0.24) = 0.24
        // child (0.95, 0.5):        g0 = max(0.04, 0.10) = 0.10, g1 = max(0.01, 0.40) = 0.40
        let mut s = two_subproblems([&[0.9, 0.2], &[0.3, 0.9]], &[1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(s.offer(0, &sol(&[0.7, 0.7], 3), &mut rng).is_empty());
        let mut replaced = s.offer(0, &sol(&[0.95, 0.5], 4), &mut rng);
        replaced.sort();
        assert_eq!(replaced, vec![0]);
        assert_eq!(s.incumbents[0].objectives.values(), &[0.95, 0.5]);
        assert_eq!(s.incumbents[1].objectives.values(), &[0.3, 0.9]);
    }

    #[test]
    fn replacement_bound() {
        let mut s = two_subproblems([&[0.1, 0.1], &[0.1, 0.1]], &[1.0, 1.0]);
        s.params.max_replacements = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.offer(0, &sol(&[0.9, 0.9], 3), &mut rng).len(), 1);
    }

    #[test]
    fn tchebycheff_nonnegative_and_zero_at_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let f: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let l: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let z: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            assert!(tchebycheff(&f, &l, &z) >= 0.0);
            assert_eq!(tchebycheff(&z, &l, &z), 0.0);
        }
    }
}
