//! The EvoPref main loop: NSGA-II ranking, tournament selection, archive-partner
//! crossover, Gaussian mutation, `(mu + mu)` truncation and 1/5-rule step sizes.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use super::RunError;
use crate::adaptation::SigmaController;
use crate::archive::{ArchiveRecord, GridArchive, OccupancyStats};
use crate::baselines::{generation_seed, Outcome, Problem};
use crate::genome::{gaussian_mutate, rank_preserving_crossover, sample_gamma, LowRankGenome};
use crate::rng::{self, label};
use crate::selection::{dominates_unchecked, environmental_selection, nondominated_indices, tournament, RankedPopulation, TieBreak};
use crate::trace::{Solution, Tracker};

#[derive(Debug, Clone, PartialEq)]
pub struct EvoprefParams {
    pub mu: usize,
    pub generations: usize,
    pub grid: usize,
    pub tournament_size: usize,
    pub sigma0: f64,
    pub p_c: f64,
    pub window: usize,
    pub no_archive: bool,
    pub no_crossover: bool,
    pub no_crowding: bool,
    pub generational: bool,
    /// Archive snapshot interval; `None` keeps no intermediate snapshots.
    pub snapshot_every: Option<usize>,
}

impl Default for EvoprefParams {
    fn default() -> Self {
        Self {
            mu: 32,
            generations: 50,
            grid: 10,
            tournament_size: 2,
            sigma0: 0.01,
            p_c: 0.3,
            window: 10,
            no_archive: false,
            no_crossover: false,
            no_crowding: false,
            generational: false,
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvoprefOutcome {
    pub outcome: Outcome,
    pub archive: Option<GridArchive>,
    pub population: Vec<Solution>,
    /// Step size at each logged row.
    pub sigma_trajectory: Vec<f64>,
    /// Archive contents by generation, when snapshots were requested.
    pub snapshots: BTreeMap<usize, Vec<ArchiveRecord>>,
    pub occupancy: Option<OccupancyStats>,
}

fn at(generation: usize) -> impl Fn(RunError) -> RunError {
    move |e| RunError::AtGeneration { generation, message: e.to_string() }
}

/// Population members not dominated by any other member.
fn population_front(pop: &[Solution]) -> Vec<&Solution> {
    let objs: Vec<&[f64]> = pop.iter().map(|s| s.objectives.values()).collect();
    nondominated_indices(&objs).into_iter().map(|i| &pop[i]).collect()
}

/// Runs the loop for `params.generations` generations.
///
/// Generation 1 evaluates the initial population; every later generation
/// evaluates `mu` offspring, so a run spends `mu * generations` evaluations.
/// With zero generations the initial population is still evaluated and
/// archived, and no variation takes place. Row 0 of the metric log is the
/// state before any evaluation (with zero generations, after the initial one).
pub fn evolve(problem: &Problem, params: &EvoprefParams, seed: u64) -> Result<EvoprefOutcome, RunError> {
    if params.mu < 2 {
        return Err(RunError::Config(format!("mu must be at least 2, got {}", params.mu)));
    }
    let mu = params.mu;
    let tie_break = if params.no_crowding { TieBreak::Random } else { TieBreak::Crowding };
    let mut archive = if params.no_archive {
        None
    } else {
        Some(GridArchive::new(params.grid, problem.landscape.m())?)
    };
    let mut ctrl = SigmaController::new(params.sigma0, params.window);
    let mut tracker = Tracker::new(problem.landscape);
    let mut sigma_trajectory = Vec::new();
    let mut snapshots = BTreeMap::new();
    let snapshot_due = |t: usize| params.snapshot_every.is_some_and(|s| t.is_multiple_of(s) || t == params.generations);

    let mut batch: Vec<LowRankGenome> = (0..mu)
        .map(|i| problem.sample(rng::derive_seed(seed, &[label::INIT, i as u64])))
        .collect::<Result<_, _>>()?;
    let mut parents: Vec<usize> = Vec::new();
    let mut population: Vec<Solution> = Vec::new();
    let mut evaluations = 0;

    let log = |tracker: &mut Tracker,
               t: usize,
               archive: &Option<GridArchive>,
               population: &[Solution],
               sigma: f64,
               evaluations: usize|
     -> Result<(), RunError> {
        match archive {
            Some(a) => tracker.log(t, a.iter().map(|(_, e)| (e.genome.as_ref(), &e.objectives)), sigma, evaluations)?,
            None => tracker.log(
                t,
                population_front(population).into_iter().map(|s| (s.genome.as_ref(), &s.objectives)),
                sigma,
                evaluations,
            )?,
        }
        Ok(())
    };

    let first_generation = if params.generations == 0 { 0 } else { 1 };
    if params.generations > 0 {
        log(&mut tracker, 0, &archive, &population, ctrl.sigma(), 0)?;
        sigma_trajectory.push(ctrl.sigma());
        if snapshot_due(0) {
            snapshots.insert(0, Vec::new());
        }
    }

    for t in first_generation..=params.generations {
        let objs = problem
            .evaluate_batch(&batch, generation_seed(seed, t.max(1)))
            .map_err(|e| at(t)(e.into()))?;
        evaluations += batch.len();
        let offspring: Vec<Solution> = batch
            .drain(..)
            .zip(objs)
            .map(|(g, f)| Solution { genome: Arc::new(g), objectives: f })
            .collect();
        if let Some(a) = archive.as_mut() {
            for s in &offspring {
                a.try_insert(s.genome.clone(), s.objectives.clone(), t).map_err(|e| at(t)(e.into()))?;
            }
        }

        if population.is_empty() {
            population = offspring;
        } else {
            for (child, &p) in offspring.iter().zip(&parents) {
                ctrl.record_offspring(dominates_unchecked(&child.objectives, &population[p].objectives));
            }
            if params.generational {
                population = offspring;
            } else {
                let mut combined = std::mem::take(&mut population);
                combined.extend(offspring);
                let objs: Vec<&[f64]> = combined.iter().map(|s| s.objectives.values()).collect();
                let mut rng = rng::stream(seed, &[label::TRUNCATION, t as u64]);
                let keep = environmental_selection(&objs, mu, tie_break, &mut rng).map_err(|e| at(t)(e.into()))?;
                let mut slots: Vec<Option<Solution>> = combined.into_iter().map(Some).collect();
                population = keep.into_iter().map(|i| slots[i].take().expect("distinct indices")).collect();
            }
        }
        if ctrl.due(t) {
            ctrl.adapt_sigma();
        }
        log(&mut tracker, t, &archive, &population, ctrl.sigma(), evaluations)?;
        sigma_trajectory.push(ctrl.sigma());
        if snapshot_due(t) {
            snapshots.insert(t, archive.as_ref().map(GridArchive::snapshot).unwrap_or_default());
        }
        if t >= params.generations {
            break;
        }

        let objs: Vec<&[f64]> = population.iter().map(|s| s.objectives.values()).collect();
        let ranked = RankedPopulation::new(&objs);
        let mut rng = rng::stream(seed, &[label::VARIATION, t as u64]);
        parents.clear();
        for i in 0..mu {
            let w = tournament(&ranked, params.tournament_size, tie_break, &mut rng).map_err(|e| at(t)(e.into()))?;
            let cross = rng.random::<f64>() < params.p_c && !params.no_crossover;
            let parent = &population[w].genome;
            let base = if cross {
                let partner = match &archive {
                    Some(a) => a.sample_partner(&mut rng).map(|e| e.genome.clone()),
                    None => {
                        let second = tournament(&ranked, params.tournament_size, tie_break, &mut rng)
                            .map_err(|e| at(t)(e.into()))?;
                        Some(population[second].genome.clone())
                    }
                };
                match partner {
                    Some(p) => {
                        let gamma = sample_gamma(rng::derive_seed(seed, &[label::GAMMA, t as u64, i as u64]));
                        Some(rank_preserving_crossover(parent, &p, gamma).map_err(|e| at(t)(e.into()))?)
                    }
                    None => None,
                }
            } else {
                None
            };
            let child = gaussian_mutate(
                base.as_ref().unwrap_or(parent),
                ctrl.sigma(),
                rng::derive_seed(seed, &[label::MUTATE, t as u64, i as u64]),
            )
            .map_err(|e| at(t)(e.into()))?;
            batch.push(child);
            parents.push(w);
        }
    }

    let solutions: Vec<Solution> = match &archive {
        Some(a) => a
            .iter()
            .map(|(_, e)| Solution { genome: e.genome.clone(), objectives: e.objectives.clone() })
            .collect(),
        None => population_front(&population).into_iter().cloned().collect(),
    };
    let occupancy = archive.as_ref().map(|a| a.occupancy_stats(Some(problem.landscape)));
    Ok(EvoprefOutcome {
        outcome: Outcome { rows: tracker.into_rows(), solutions, evaluations_used: evaluations },
        archive,
        population,
        sigma_trajectory,
        snapshots,
        occupancy,
    })
}
