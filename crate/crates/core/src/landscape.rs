//! Seeded synthetic preference landscapes.
//!
//! A flat genome `x` is projected into a low-dimensional feature space by a
//! fixed matrix `P` (orthogonal rows of norm `projection_scale`). Each of the
//! `k` modes is a Gaussian bump in feature space carrying a score profile over
//! the `m` objectives:
//!
//! ```text
//! f_j(x) = clamp(floor + max_i s_ij * exp(-|Px - c_i|^2 / (2 w_i^2)) + eps_j, 0, 1)
//! ```
//!
//! `eps_j` is common-random-number noise: it depends only on the landscape
//! seed, the generation seed and `j`, never on the genome.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::{GenomeId, LowRankGenome};
use crate::rng::{self, label};

#[derive(Debug, Error, PartialEq)]
pub enum LandscapeError {
    #[error("invalid landscape configuration: {0}")]
    Config(String),
    #[error(
        "could not place {k} mode centers with separation {separation} after {attempts} draws; \
         use fewer modes or a smaller width"
    )]
    Separation {
        k: usize,
        separation: f64,
        attempts: usize,
    },
    #[error("dimension mismatch: landscape expects D={expected}, genome has D={got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid objective weights: {0}")]
    Weights(String),
    #[error("objective value {value} at index {index} is outside [0, 1]")]
    Range { index: usize, value: f64 },
}

/// A point in `[0, 1]^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self, LandscapeError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(LandscapeError::Range { index, value });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ObjectiveVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ObjectiveVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ObjectiveVector {
    type Error = LandscapeError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ObjectiveVector> for Vec<f64> {
    fn from(v: ObjectiveVector) -> Self {
        v.0
    }
}

/// Surface the score directions are drawn from. Points on either surface are
/// mutually non-dominating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreShell {
    /// Nonnegative vectors summing to one.
    Simplex,
    /// Nonnegative unit vectors.
    Sphere,
}

/// Landscape parameters, as they appear in experiment config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    /// Number of modes.
    pub k: usize,
    /// Feature-space dimension.
    pub p: usize,
    /// Number of objectives.
    pub m: usize,
    pub width: f64,
    pub noise_scale: f64,
    pub floor: f64,
    pub capture_factor: f64,
    /// Centers are drawn uniformly from `[-half_width, half_width]^p`.
    pub half_width: f64,
    /// Row norm of the projection matrix.
    pub projection_scale: f64,
    /// Log-sum-exp temperature used by the smoothed objective.
    pub smoothing: f64,
    /// Score profiles are `score_low + (score_high - score_low) * u` with `u`
    /// uniform on the chosen shell.
    pub shell: ScoreShell,
    pub score_low: f64,
    pub score_high: f64,
    pub seed: u64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            k: 20,
            p: 8,
            m: 3,
            width: 0.5,
            noise_scale: 0.01,
            floor: 0.05,
            capture_factor: 2.0,
            half_width: 0.8,
            projection_scale: 50.0,
            smoothing: 0.05,
            shell: ScoreShell::Sphere,
            score_low: 0.0,
            score_high: 0.95,
            seed: 0,
        }
    }
}

impl LandscapeConfig {
    pub fn validate(&self) -> Result<(), LandscapeError> {
        let bad = |msg: &str| Err(LandscapeError::Config(msg.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.p == 0 {
            return bad("p must be at least 1");
        }
        if self.m == 0 {
            return bad("m must be at least 1");
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return bad("width must be positive");
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return bad("noise_scale must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.floor) {
            return bad("floor must lie in [0, 1)");
        }
        if !(self.capture_factor.is_finite() && self.capture_factor > 0.0) {
            return bad("capture_factor must be positive");
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return bad("half_width must be positive");
        }
        if !(self.projection_scale.is_finite() && self.projection_scale > 0.0) {
            return bad("projection_scale must be positive");
        }
        if !(self.smoothing.is_finite() && self.smoothing > 0.0) {
            return bad("smoothing must be positive");
        }
        if !(0.0 <= self.score_low && self.score_low < self.score_high)
            || self.floor + self.score_high > 1.0
        {
            return bad("need 0 <= score_low < score_high and floor + score_high <= 1");
        }
        Ok(())
    }
}

/// One basin of the landscape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMode {
    pub center: Vec<f64>,
    pub width: f64,
    pub scores: ObjectiveVector,
}

#[derive(Debug, Clone)]
pub struct PreferenceLandscape {
    config: LandscapeConfig,
    dim: usize,
    modes: Vec<PreferenceMode>,
    /// `p x D`, row-major.
    projection: Vec<f64>,
}

const MAX_CENTER_DRAWS: usize = 200_000;

impl PreferenceLandscape {
    /// Builds the landscape for genomes of flat dimension `dim`.
    pub fn build(config: &LandscapeConfig, dim: usize) -> Result<Self, LandscapeError> {
        config.validate()?;
        if config.p > dim {
            return Err(LandscapeError::Config(format!(
                "feature dimension p={} exceeds genome dimension D={dim}",
                config.p
            )));
        }
        let mut rng = rng::stream(config.seed, &[label::LANDSCAPE]);

        let separation = 3.0 * config.width;
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(config.k);
        let mut draws = 0;
        while centers.len() < config.k {
            if draws == MAX_CENTER_DRAWS {
                return Err(LandscapeError::Separation {
                    k: config.k,
                    separation,
                    attempts: draws,
                });
            }
            draws += 1;
            let c: Vec<f64> = (0..config.p)
                .map(|_| rng.random_range(-config.half_width..=config.half_width))
                .collect();
            if centers.iter().all(|o| euclid(o, &c) >= separation) {
                centers.push(c);
            }
        }

        let span = config.score_high - config.score_low;
        let modes = centers
            .into_iter()
            .map(|center| {
                let (e, total): (Vec<f64>, f64) = match config.shell {
                    ScoreShell::Simplex => {
                        let e: Vec<f64> = (0..config.m).map(|_| Exp1.sample(&mut rng)).collect();
                        let total = e.iter().sum();
                        (e, total)
                    }
                    ScoreShell::Sphere => {
                        let e: Vec<f64> =
                            (0..config.m).map(|_| StandardNormal.sample(&mut rng)).map(|v: f64| v.abs()).collect();
                        let total = e.iter().map(|v| v * v).sum::<f64>().sqrt();
                        (e, total)
                    }
                };
                let scores = e
                    .iter()
                    .map(|v| (config.score_low + span * v / total).clamp(0.0, 1.0))
                    .collect();
                PreferenceMode {
                    center,
                    width: config.width,
                    scores: ObjectiveVector(scores),
                }
            })
            .collect();

        let projection = orthogonal_rows(config.p, dim, config.projection_scale, &mut rng);
        Ok(Self {
            config: config.clone(),
            dim,
            modes,
            projection,
        })
    }

    pub fn config(&self) -> &LandscapeConfig {
        &self.config
    }

    pub fn modes(&self) -> &[PreferenceMode] {
        &self.modes
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    pub fn m(&self) -> usize {
        self.config.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    fn check_dim(&self, g: &LowRankGenome) -> Result<(), LandscapeError> {
        if g.dim() != self.dim {
            return Err(LandscapeError::Dimension {
                expected: self.dim,
                got: g.dim(),
            });
        }
        Ok(())
    }

    /// `P * x` for a flat parameter vector of length `D`.
    pub fn features_of(&self, x: &[f64]) -> Vec<f64> {
        self.projection
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn features(&self, g: &LowRankGenome) -> Result<Vec<f64>, LandscapeError> {
        self.check_dim(g)?;
        Ok(self.features_of(g.flatten()))
    }

    fn kernels(&self, z: &[f64]) -> Vec<f64> {
        self.modes
            .iter()
            .map(|mode| {
                let d2 = sq_dist(z, &mode.center);
                (-d2 / (2.0 * mode.width * mode.width)).exp()
            })
            .collect()
    }

    /// Noiseless objectives at feature point `z`, in `[floor, 1]`.
    pub fn noiseless_at(&self, z: &[f64]) -> Vec<f64> {
        let phi = self.kernels(z);
        (0..self.config.m)
            .map(|j| {
                let peak = self
                    .modes
                    .iter()
                    .zip(&phi)
                    .map(|(mode, p)| mode.scores[j] * p)
                    .fold(0.0, f64::max);
                (self.config.floor + peak).min(1.0)
            })
            .collect()
    }

    /// Common-random-number noise for one generation.
    pub fn noise(&self, gen_seed: u64) -> Vec<f64> {
        if self.config.noise_scale == 0.0 {
            return vec![0.0; self.config.m];
        }
        let normal = Normal::new(0.0, self.config.noise_scale).expect("validated noise scale");
        (0..self.config.m)
            .map(|j| {
                let mut r = rng::stream(self.config.seed, &[label::NOISE, gen_seed, j as u64]);
                normal.sample(&mut r)
            })
            .collect()
    }

    pub fn evaluate(&self, g: &LowRankGenome, gen_seed: u64) -> Result<ObjectiveVector, LandscapeError> {
        self.check_dim(g)?;
        let z = self.features_of(g.flatten());
        Ok(self.evaluate_features(&z, &self.noise(gen_seed)))
    }

    /// Objectives at feature point `z` with a precomputed noise vector.
    pub fn evaluate_features(&self, z: &[f64], noise: &[f64]) -> ObjectiveVector {
        ObjectiveVector(
            self.noiseless_at(z)
                .into_iter()
                .zip(noise)
                .map(|(f, e)| (f + e).clamp(0.0, 1.0))
                .collect(),
        )
    }

    pub fn evaluate_noiseless(&self, g: &LowRankGenome) -> Result<ObjectiveVector, LandscapeError> {
        self.check_dim(g)?;
        Ok(ObjectiveVector(self.noiseless_at(&self.features_of(g.flatten()))))
    }

    /// Index of the nearest mode when it lies within `capture_factor` widths.
    pub fn mode_of_features(&self, z: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, mode) in self.modes.iter().enumerate() {
            let d = sq_dist(z, &mode.center).sqrt();
            // Ties within 1e-12 go to the lower index.
            if best.is_none_or(|(_, bd)| d < bd - 1e-12) {
                best = Some((i, d));
            }
        }
        best.and_then(|(i, d)| {
            (d <= self.modes[i].width * self.config.capture_factor).then_some(i)
        })
    }

    pub fn mode_of(&self, g: &LowRankGenome) -> Result<Option<usize>, LandscapeError> {
        self.check_dim(g)?;
        Ok(self.mode_of_features(&self.features_of(g.flatten())))
    }

    fn check_weights(&self, weights: &[f64]) -> Result<(), LandscapeError> {
        if weights.len() != self.config.m {
            return Err(LandscapeError::Weights(format!(
                "expected {} weights, got {}",
                self.config.m,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(LandscapeError::Weights("weights must be finite and nonnegative".into()));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(LandscapeError::Weights("weights must have a positive sum".into()));
        }
        Ok(())
    }

    /// Smoothed noiseless objectives: the max over modes replaced by a
    /// log-sum-exp at temperature `smoothing`.
    pub fn smoothed_at(&self, z: &[f64]) -> Vec<f64> {
        let phi = self.kernels(z);
        let tau = self.config.smoothing;
        (0..self.config.m)
            .map(|j| {
                let terms: Vec<f64> = self
                    .modes
                    .iter()
                    .zip(&phi)
                    .map(|(mode, p)| mode.scores[j] * p / tau)
                    .collect();
                self.config.floor + tau * log_sum_exp(&terms)
            })
            .collect()
    }

    /// `sum_j w_j * smoothed_j` at genome `g`.
    pub fn smoothed_weighted(&self, g: &LowRankGenome, weights: &[f64]) -> Result<f64, LandscapeError> {
        self.check_dim(g)?;
        self.check_weights(weights)?;
        let f = self.smoothed_at(&self.features_of(g.flatten()));
        Ok(f.iter().zip(weights).map(|(a, b)| a * b).sum())
    }

    /// Gradient of the weighted smoothed objective with respect to feature coordinates.
    pub fn feature_gradient(&self, z: &[f64], weights: &[f64]) -> Vec<f64> {
        let phi = self.kernels(z);
        let tau = self.config.smoothing;
        let mut grad = vec![0.0; z.len()];
        for (j, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let terms: Vec<f64> = self
                .modes
                .iter()
                .zip(&phi)
                .map(|(mode, p)| mode.scores[j] * p / tau)
                .collect();
            let lse = log_sum_exp(&terms);
            for ((mode, &p), t) in self.modes.iter().zip(&phi).zip(&terms) {
                let softmax = (t - lse).exp();
                // d phi / dz = -phi * (z - c) / w^2
                let coef = w * softmax * mode.scores[j] * p / (mode.width * mode.width);
                for ((g, zi), ci) in grad.iter_mut().zip(z).zip(&mode.center) {
                    *g -= coef * (zi - ci);
                }
            }
        }
        grad
    }

    /// Analytic gradient of the weighted smoothed objective with respect to the flat genome.
    pub fn weighted_gradient(&self, g: &LowRankGenome, weights: &[f64]) -> Result<Vec<f64>, LandscapeError> {
        self.check_dim(g)?;
        self.check_weights(weights)?;
        let z = self.features_of(g.flatten());
        Ok(self.pull_back(&self.feature_gradient(&z, weights)))
    }

    /// `P^T * v` for a feature-space vector `v`.
    pub fn pull_back(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (row, &vi) in self.projection.chunks_exact(self.dim).zip(v) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += r * vi;
            }
        }
        out
    }

    /// Minimum-norm genome (with `template`'s shapes and alpha) whose features equal `target`.
    pub fn preimage(&self, template: &LowRankGenome, target: &[f64]) -> Result<LowRankGenome, LandscapeError> {
        self.check_dim(template)?;
        let p = self.config.p;
        if target.len() != p {
            return Err(LandscapeError::Dimension { expected: p, got: target.len() });
        }
        let proj = DMatrix::from_row_slice(p, self.dim, &self.projection);
        let gram = &proj * proj.transpose();
        let y = gram
            .cholesky()
            .expect("projection rows are linearly independent")
            .solve(&DVector::from_column_slice(target));
        let x = proj.transpose() * y;
        Ok(template
            .unflatten(x.iter().copied().collect())
            .expect("dimension checked")
            .with_id(GenomeId(0)))
    }

    pub fn to_dump(&self) -> LandscapeDump {
        LandscapeDump {
            config: self.config.clone(),
            dim: self.dim,
            modes: self.modes.clone(),
        }
    }
}

/// Audit view of a landscape: its configuration and every mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeDump {
    pub config: LandscapeConfig,
    pub dim: usize,
    pub modes: Vec<PreferenceMode>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `rows x cols` matrix with orthogonal rows of norm `scale` (Gram-Schmidt on Gaussian draws).
fn orthogonal_rows<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rows);
    while basis.len() < rows {
        let mut v: Vec<f64> = (0..cols).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis.into_iter().flatten().map(|x| x * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{default_shapes, random_init, DEFAULT_ALPHA};
    use crate::selection::dominates;

    fn template() -> LowRankGenome {
        random_init(&default_shapes(), 0.01, DEFAULT_ALPHA, 1).unwrap()
    }

    fn noiseless(k: usize) -> PreferenceLandscape {
        let cfg = LandscapeConfig { k, noise_scale: 0.0, seed: 5, ..Default::default() };
        PreferenceLandscape::build(&cfg, 512).unwrap()
    }

    #[test]
    fn objective_vector_range() {
        assert!(ObjectiveVector::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert_eq!(
            ObjectiveVector::new(vec![0.2, 1.5]),
            Err(LandscapeError::Range { index: 1, value: 1.5 })
        );
        assert!(serde_json::from_str::<ObjectiveVector>("[0.1, -0.2]").is_err());
    }

    #[test]
    fn single_mode_is_global_optimum() {
        let l = noiseless(1);
        let c = l.modes()[0].center.clone();
        let g = l.preimage(&template(), &c).unwrap();
        let f = l.evaluate(&g, 3).unwrap();
        for (fj, sj) in f.iter().zip(l.modes()[0].scores.iter()) {
            assert!((fj - (0.05 + sj)).abs() < 1e-9);
        }
        for seed in 0..50 {
            let other = random_init(&default_shapes(), 0.05, DEFAULT_ALPHA, seed).unwrap();
            let fo = l.evaluate(&other, 3).unwrap();
            assert!(fo.iter().zip(f.iter()).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn build_is_deterministic_and_separated() {
        let cfg = LandscapeConfig { seed: 17, ..Default::default() };
        let a = PreferenceLandscape::build(&cfg, 512).unwrap();
        let b = PreferenceLandscape::build(&cfg, 512).unwrap();
        assert_eq!(a.to_dump(), b.to_dump());
        assert_eq!(a.projection, b.projection);
        assert_eq!(a.k(), 20);
        for i in 0..a.k() {
            for j in 0..i {
                let d = euclid(&a.modes()[i].center, &a.modes()[j].center);
                assert!(d >= 3.0 * 0.5, "modes {i},{j} at distance {d}");
                assert!(!dominates(&a.modes()[i].scores, &a.modes()[j].scores).unwrap());
            }
        }
    }

    #[test]
    fn impossible_separation_is_reported() {
        let cfg = LandscapeConfig { k: 50, p: 1, half_width: 1.0, ..Default::default() };
        assert!(matches!(
            PreferenceLandscape::build(&cfg, 512),
            Err(LandscapeError::Separation { .. })
        ));
        let cfg = LandscapeConfig { p: 600, ..Default::default() };
        assert!(matches!(PreferenceLandscape::build(&cfg, 512), Err(LandscapeError::Config(_))));
    }

    #[test]
    fn far_genome_sits_at_floor() {
        let l = noiseless(20);
        // Push the feature point at least 10 widths away from every center.
        let z = vec![40.0; 8];
        let g = l.preimage(&template(), &z).unwrap();
        let f = l.evaluate(&g, 0).unwrap();
        assert!(f.iter().all(|v| *v <= 0.05 + 1e-10));
        assert_eq!(l.mode_of(&g).unwrap(), None);
    }

    #[test]
    fn common_random_numbers() {
        let cfg = LandscapeConfig { seed: 3, noise_scale: 0.05, ..Default::default() };
        let l = PreferenceLandscape::build(&cfg, 512).unwrap();
        let noisy = LandscapeConfig { noise_scale: 0.0, ..cfg.clone() };
        let quiet = PreferenceLandscape::build(&noisy, 512).unwrap();
        let g1 = random_init(&default_shapes(), 0.01, DEFAULT_ALPHA, 1).unwrap();
        let g2 = random_init(&default_shapes(), 0.01, DEFAULT_ALPHA, 2).unwrap();
        let e = l.noise(77);
        assert_eq!(e, l.noise(77));
        assert_ne!(e, l.noise(78));
        for g in [&g1, &g2] {
            let f = l.evaluate(g, 77).unwrap();
            let f0 = quiet.evaluate(g, 77).unwrap();
            for j in 0..3 {
                let expected = (f0[j] + e[j]).clamp(0.0, 1.0);
                assert_eq!(f[j], expected);
            }
        }
    }

    #[test]
    fn mode_identification() {
        let l = noiseless(20);
        let t = template();
        let g = l.preimage(&t, &l.modes()[3].center).unwrap();
        assert_eq!(l.mode_of(&g).unwrap(), Some(3));
        assert_eq!(l.mode_of_features(&[30.0; 8]), None);

        let mut tie = l.clone();
        tie.modes[1].center = vec![0.0; 8];
        tie.modes[2].center = {
            let mut v = vec![0.0; 8];
            v[0] = 1.6;
            v
        };
        let mut z = vec![0.0; 8];
        z[0] = 0.8;
        for (i, m) in tie.modes.iter_mut().enumerate() {
            if i != 1 && i != 2 {
                m.center = vec![100.0 + i as f64; 8];
            }
        }
        assert_eq!(tie.mode_of_features(&z), Some(1));
    }

    #[test]
    fn dimension_mismatch() {
        let l = noiseless(3);
        let small = random_init(&[crate::genome::LayerShape::new(4, 4, 1).unwrap()], 0.1, 1.0, 0).unwrap();
        assert!(matches!(l.evaluate(&small, 0), Err(LandscapeError::Dimension { .. })));
        assert!(l.mode_of(&small).is_err());
        assert!(l.weighted_gradient(&small, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let l = noiseless(20);
        let w = [0.4, 0.3, 0.3];
        for seed in 0..10 {
            // Start near a center so the gradient is not vanishingly small.
            let c = &l.modes()[seed as usize % 20].center;
            let z: Vec<f64> = c.iter().enumerate().map(|(i, v)| v + 0.3 * ((i + seed as usize) as f64).sin()).collect();
            let base = l.preimage(&template(), &z).unwrap();
            let grad = l.weighted_gradient(&base, &w).unwrap();
            let x = base.flatten().to_vec();
            let h = 1e-5;
            let mut fd = vec![0.0; x.len()];
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xm = x.clone();
                xm[i] -= h;
                let fp = l.smoothed_weighted(&base.unflatten(xp).unwrap(), &w).unwrap();
                let fm = l.smoothed_weighted(&base.unflatten(xm).unwrap(), &w).unwrap();
                fd[i] = (fp - fm) / (2.0 * h);
            }
            let num: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(num / den < 1e-4, "relative error {}", num / den);
        }
    }

    #[test]
    fn gradient_is_linear_in_weights() {
        let l = noiseless(20);
        let g = l.preimage(&template(), &l.modes()[0].center.iter().map(|v| v + 0.2).collect::<Vec<_>>()).unwrap();
        let g1 = l.weighted_gradient(&g, &[1.0, 0.0, 0.0]).unwrap();
        let g2 = l.weighted_gradient(&g, &[2.5, 0.0, 0.0]).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((2.5 * a - b).abs() <= 1e-12 * b.abs().max(1e-12));
        }
        assert!(l.weighted_gradient(&g, &[0.0, 0.0, 0.0]).is_err());
        assert!(l.weighted_gradient(&g, &[1.0, -1.0, 0.5]).is_err());
    }

    #[test]
    fn gradient_vanishes_at_located_optimum() {
        let l = noiseless(20);
        let w = [0.4, 0.3, 0.3];
        let mut z = l.modes()[4].center.clone();
        // Newton-free fixed-point ascent in feature space from the center.
        for _ in 0..2000 {
            let g = l.feature_gradient(&z, &w);
            for (zi, gi) in z.iter_mut().zip(&g) {
                *zi += 0.05 * gi;
            }
        }
        let genome = l.preimage(&template(), &z).unwrap();
        let grad = l.weighted_gradient(&genome, &w).unwrap();
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "gradient norm {norm}");
        assert_eq!(l.mode_of(&genome).unwrap(), Some(4));
    }

    #[test]
    fn dump_round_trips() {
        let l = noiseless(4);
        let text = serde_json::to_string(&l.to_dump()).unwrap();
        let back: LandscapeDump = serde_json::from_str(&text).unwrap();
        assert_eq!(back, l.to_dump());
    }
}
