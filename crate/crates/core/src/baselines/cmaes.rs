//! CMA-ES on the weighted sum of objectives.
//!
//! The default is the separable variant (diagonal covariance, O(D) memory);
//! full covariance is available for small genomes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::{generation_seed, solution, weighted_sum, BaselineError, BudgetedRun, Outcome, Problem, DEFAULT_WEIGHTS};
use crate::rng::{self, label};
use crate::trace::{Solution, Tracker};

/// Largest dimension accepted with full covariance.
pub const FULL_COVARIANCE_MAX_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Covariance {
    #[default]
    Separable,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaesParams {
    /// Offspring per iteration.
    pub lambda: usize,
    pub sigma0: f64,
    pub weights: Vec<f64>,
    pub covariance: Covariance,
}

impl Default for CmaesParams {
    fn default() -> Self {
        Self {
            lambda: 32,
            sigma0: 0.01,
            weights: DEFAULT_WEIGHTS.to_vec(),
            covariance: Covariance::Separable,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CmaesOutcome {
    pub best: Solution,
    pub best_fitness: f64,
    /// Best weighted fitness of each iteration's offspring.
    pub trajectory: Vec<f64>,
    pub outcome: Outcome,
}

struct Strategy {
    n: usize,
    mu: usize,
    recomb: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Strategy {
    fn new(n: usize, lambda: usize, separable: bool) -> Self {
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let recomb: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / recomb.iter().map(|w| w * w).sum::<f64>();
        let nf = n as f64;
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let mut c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let mut c_mu = 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff);
        if separable {
            c_1 *= (nf + 2.0) / 3.0;
            c_mu *= (nf + 2.0) / 3.0;
        }
        c_1 = c_1.min(1.0);
        c_mu = c_mu.min(1.0 - c_1);
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self { n, mu, recomb, mu_eff, c_sigma, d_sigma, c_c, c_1, c_mu, chi_n }
    }
}

enum Cov {
    Diag(Vec<f64>),
    Full { c: DMatrix<f64>, basis: DMatrix<f64>, scales: DVector<f64> },
}

impl Cov {
    /// `y = C^{1/2} z`.
    fn apply_sqrt(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Cov::Diag(d) => z.iter().zip(d).map(|(zi, di)| zi * di.sqrt()).collect(),
            Cov::Full { basis, scales, .. } => {
                let v = DVector::from_column_slice(z).component_mul(scales);
                (basis * v).iter().copied().collect()
            }
        }
    }

    /// `C^{-1/2} y`.
    fn apply_inv_sqrt(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Cov::Diag(d) => y.iter().zip(d).map(|(yi, di)| yi / di.sqrt()).collect(),
            Cov::Full { basis, scales, .. } => {
                let v = basis.transpose() * DVector::from_column_slice(y);
                let v = v.component_div(scales);
                (basis * v).iter().copied().collect()
            }
        }
    }

    fn update(&mut self, s: &Strategy, p_c: &[f64], h_sigma: f64, ys: &[Vec<f64>]) {
        let keep = 1.0 - s.c_1 - s.c_mu;
        let correction = (1.0 - h_sigma) * s.c_c * (2.0 - s.c_c);
        match self {
            Cov::Diag(d) => {
                for (i, di) in d.iter_mut().enumerate() {
                    let rank_mu: f64 = s.recomb.iter().zip(ys).map(|(w, y)| w * y[i] * y[i]).sum();
                    *di = keep * *di + s.c_1 * (p_c[i] * p_c[i] + correction * *di) + s.c_mu * rank_mu;
                }
            }
            Cov::Full { c, basis, scales } => {
                let pc = DVector::from_column_slice(p_c);
                let mut next = &*c * (keep + s.c_1 * correction) + (&pc * pc.transpose()) * s.c_1;
                for (w, y) in s.recomb.iter().zip(ys) {
                    let y = DVector::from_column_slice(y);
                    next += (&y * y.transpose()) * (s.c_mu * w);
                }
                let next = (&next + next.transpose()) * 0.5;
                let eig = SymmetricEigen::new(next.clone());
                *scales = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
                *basis = eig.eigenvectors;
                *c = next;
            }
        }
    }
}

/// Maximizes the weighted sum of objectives. The reported solution set is the
/// best genome found, as a single point.
pub fn cmaes_weighted(
    problem: &Problem,
    params: &CmaesParams,
    max_evaluations: usize,
    seed: u64,
) -> Result<CmaesOutcome, BaselineError> {
    let lambda = params.lambda;
    if lambda < 2 || max_evaluations < lambda {
        return Err(BaselineError::Budget { budget: max_evaluations, needed: lambda.max(2) });
    }
    if params.weights.len() != problem.landscape.m() {
        return Err(BaselineError::Config(format!(
            "{} weights for {} objectives",
            params.weights.len(),
            problem.landscape.m()
        )));
    }
    if !(params.sigma0.is_finite() && params.sigma0 > 0.0) {
        return Err(BaselineError::Config(format!("sigma0 must be positive, got {}", params.sigma0)));
    }
    let start = problem.sample(rng::derive_seed(seed, &[label::INIT, 0]))?;
    let n = start.dim();
    let separable = params.covariance == Covariance::Separable;
    if !separable && n > FULL_COVARIANCE_MAX_DIM {
        return Err(BaselineError::Config(format!(
            "full covariance supports D <= {FULL_COVARIANCE_MAX_DIM}, got {n}"
        )));
    }
    let s = Strategy::new(n, lambda, separable);
    let mut cov = if separable {
        Cov::Diag(vec![1.0; n])
    } else {
        Cov::Full {
            c: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
        }
    };
    let mut mean = start.flatten().to_vec();
    let mut sigma = params.sigma0;
    let mut p_sigma = vec![0.0; n];
    let mut p_c = vec![0.0; n];

    let mut budget = BudgetedRun::new(max_evaluations);
    let mut tracker = Tracker::new(problem.landscape);
    tracker.log_values(0, 0.0, 0, sigma, 0);
    let mut best: Option<(Solution, f64)> = None;
    let mut trajectory = Vec::new();
    let mut t = 0usize;

    while budget.remaining() > 0 {
        t += 1;
        let batch = lambda.min(budget.remaining());
        let mut rng = rng::stream(seed, &[label::BASELINE, t as u64]);
        let mut ys = Vec::with_capacity(batch);
        let mut genomes = Vec::with_capacity(batch);
        for _ in 0..batch {
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y = cov.apply_sqrt(&z);
            let x: Vec<f64> = mean.iter().zip(&y).map(|(m, yi)| m + sigma * yi).collect();
            if x.iter().any(|v| !v.is_finite()) {
                return Err(BaselineError::Divergence { step: t, detail: "non-finite CMA-ES sample".into() });
            }
            genomes.push(start.unflatten(x)?);
            ys.push(y);
        }
        let objs = problem.evaluate_batch(&genomes, generation_seed(seed, t))?;
        budget.consume(batch)?;
        let fitness: Vec<f64> = objs.iter().map(|f| weighted_sum(f, &params.weights)).collect();
        let mut order: Vec<usize> = (0..batch).collect();
        order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
        let top = order[0];
        trajectory.push(fitness[top]);
        if best.as_ref().is_none_or(|(_, f)| fitness[top] > *f) {
            best = Some((solution(genomes[top].clone(), objs[top].clone()), fitness[top]));
        }

        if batch == lambda {
            let selected: Vec<Vec<f64>> = order[..s.mu].iter().map(|&i| ys[i].clone()).collect();
            let y_w: Vec<f64> = (0..n)
                .map(|i| s.recomb.iter().zip(&selected).map(|(w, y)| w * y[i]).sum())
                .collect();
            for (m, yw) in mean.iter_mut().zip(&y_w) {
                *m += sigma * yw;
            }
            let inv = cov.apply_inv_sqrt(&y_w);
            let k_sigma = (s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff).sqrt();
            for (p, v) in p_sigma.iter_mut().zip(&inv) {
                *p = (1.0 - s.c_sigma) * *p + k_sigma * v;
            }
            let ps_norm = p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
            let decay = 1.0 - (1.0 - s.c_sigma).powi(2 * t as i32);
            let h_sigma = if ps_norm / decay.sqrt() < (1.4 + 2.0 / (s.n as f64 + 1.0)) * s.chi_n { 1.0 } else { 0.0 };
            let k_c = h_sigma * (s.c_c * (2.0 - s.c_c) * s.mu_eff).sqrt();
            for (p, yw) in p_c.iter_mut().zip(&y_w) {
                *p = (1.0 - s.c_c) * *p + k_c * yw;
            }
            cov.update(&s, &p_c, h_sigma, &selected);
            sigma *= ((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0)).exp();
            if !sigma.is_finite() || sigma <= 0.0 {
                return Err(BaselineError::Divergence { step: t, detail: format!("step size became {sigma}") });
            }
        }
        let (b, _) = best.as_ref().expect("at least one evaluation");
        tracker.log(t, [(b.genome.as_ref(), &b.objectives)], sigma, budget.evaluations_used)?;
    }

    let (best, best_fitness) = best.expect("budget covers one iteration");
    Ok(CmaesOutcome {
        best: best.clone(),
        best_fitness,
        trajectory,
        outcome: Outcome {
            rows: tracker.into_rows(),
            solutions: vec![best],
            evaluations_used: budget.evaluations_used,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::LayerShape;
    use crate::landscape::{LandscapeConfig, PreferenceLandscape};

    fn small_problem(l: &PreferenceLandscape) -> Problem<'_> {
        Problem {
            landscape: l,
            shapes: vec![LayerShape::new(4, 4, 1).unwrap(); 2],
            alpha: 1.0,
            sigma_init: 0.01,
        }
    }

    fn single_mode() -> PreferenceLandscape {
        let cfg = LandscapeConfig { k: 1, noise_scale: 0.0, seed: 4, projection_scale: 10.0, ..Default::default() };
        PreferenceLandscape::build(&cfg, 16).unwrap()
    }

    #[test]
    fn converges_on_single_mode() {
        let l = single_mode();
        let p = small_problem(&l);
        let optimum = weighted_sum(&l.noiseless_at(&l.modes()[0].center), &DEFAULT_WEIGHTS);
        for covariance in [Covariance::Separable, Covariance::Full] {
            let params = CmaesParams { sigma0: 0.05, covariance, ..Default::default() };
            let out = cmaes_weighted(&p, &params, 1600, 1).unwrap();
            assert!(out.best_fitness >= 0.99 * optimum, "{covariance:?}: {} vs {optimum}", out.best_fitness);
            assert_eq!(out.outcome.evaluations_used, 1600);
            assert_eq!(out.trajectory.len(), 50);
        }
    }

    #[test]
    fn deterministic_and_budgeted() {
        let l = single_mode();
        let p = small_problem(&l);
        let params = CmaesParams { sigma0: 0.05, ..Default::default() };
        let a = cmaes_weighted(&p, &params, 100, 9).unwrap();
        let b = cmaes_weighted(&p, &params, 100, 9).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.outcome.evaluations_used, 100);
        assert!(matches!(cmaes_weighted(&p, &params, 31, 9), Err(BaselineError::Budget { .. })));
    }

    #[test]
    fn single_objective_weights() {
        let l = single_mode();
        let p = small_problem(&l);
        let params = CmaesParams { sigma0: 0.05, weights: vec![1.0, 0.0, 0.0], ..Default::default() };
        let out = cmaes_weighted(&p, &params, 320, 2).unwrap();
        assert_eq!(out.best_fitness, out.best.objectives[0]);
        let f1_max = out.trajectory.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(f1_max, out.best_fitness);
    }

    #[test]
    fn full_covariance_dimension_limit() {
        let cfg = LandscapeConfig { k: 1, ..Default::default() };
        let l = PreferenceLandscape::build(&cfg, 512).unwrap();
        let p = Problem { landscape: &l, shapes: crate::genome::default_shapes(), alpha: 32.0, sigma_init: 0.01 };
        let params = CmaesParams { covariance: Covariance::Full, ..Default::default() };
        assert!(matches!(cmaes_weighted(&p, &params, 64, 0), Err(BaselineError::Config(_))));
    }
}
