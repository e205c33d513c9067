//! Quality and diversity indicators: hypervolume, mode coverage, collapse,
//! and the coupon-collector coverage bound.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::ArchiveRecord;
use crate::genome::LowRankGenome;
use crate::landscape::{LandscapeError, PreferenceLandscape};
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("exact hypervolume supports 1 to 3 objectives, got {0}")]
    UnsupportedDimension(usize),
    #[error("point has {got} objectives, reference has {expected}")]
    Arity { expected: usize, got: usize },
    #[error("parameter {name} must be positive, got {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("no archive snapshot for generations {0:?}")]
    MissingSnapshots(Vec<usize>),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error("bad archive snapshot: {0}")]
    Snapshot(String),
}

/// Keeps points that weakly dominate `reference`, shifted so the reference is the origin.
fn shifted<V: AsRef<[f64]>>(points: &[V], reference: &[f64]) -> Result<Vec<Vec<f64>>, MetricsError> {
    let mut out = Vec::with_capacity(points.len());
    let mut dropped = 0;
    for p in points {
        let p = p.as_ref();
        if p.len() != reference.len() {
            return Err(MetricsError::Arity { expected: reference.len(), got: p.len() });
        }
        if p.iter().zip(reference).all(|(a, r)| a >= r) {
            out.push(p.iter().zip(reference).map(|(a, r)| a - r).collect());
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::warn!("hypervolume: discarded {dropped} points below the reference point");
    }
    Ok(out)
}

/// Exact hypervolume (maximization) of the union of boxes `[reference, p]`.
pub fn hypervolume<V: AsRef<[f64]>>(points: &[V], reference: &[f64]) -> Result<f64, MetricsError> {
    let m = reference.len();
    if !(1..=3).contains(&m) {
        return Err(MetricsError::UnsupportedDimension(m));
    }
    let pts = shifted(points, reference)?;
    Ok(match m {
        1 => pts.iter().map(|p| p[0]).fold(0.0, f64::max),
        2 => hv2(pts.iter().map(|p| (p[0], p[1])).collect()),
        _ => hv3(pts),
    })
}

fn hv2(mut pts: Vec<(f64, f64)>) -> f64 {
    pts.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut area = 0.0;
    let mut top = 0.0;
    for (x, y) in pts {
        if y > top {
            area += x * (y - top);
            top = y;
        }
    }
    area
}

/// Sweep along the third axis, maintaining the 2D staircase of the points seen so far.
fn hv3(mut pts: Vec<Vec<f64>>) -> f64 {
    pts.sort_by(|a, b| b[2].total_cmp(&a[2]));
    // Sorted by x descending, so y is strictly ascending.
    let mut stair: Vec<(f64, f64)> = Vec::new();
    let mut volume = 0.0;
    for (i, p) in pts.iter().enumerate() {
        let (x, y) = (p[0], p[1]);
        if !stair.iter().any(|&(sx, sy)| sx >= x && sy >= y) {
            stair.retain(|&(sx, sy)| !(sx <= x && sy <= y));
            let at = stair.partition_point(|&(sx, _)| sx > x);
            stair.insert(at, (x, y));
        }
        let next_z = pts.get(i + 1).map_or(0.0, |q| q[2]);
        let height = p[2] - next_z;
        if height > 0.0 {
            let mut area = 0.0;
            let mut prev_y = 0.0;
            for &(sx, sy) in &stair {
                area += sx * (sy - prev_y);
                prev_y = sy;
            }
            volume += area * height;
        }
    }
    volume
}

/// Monte Carlo hypervolume estimate with its standard error, for any `m`.
///
/// Samples uniformly from the box spanned by the reference point and the
/// componentwise maximum of the points.
pub fn hypervolume_mc<V: AsRef<[f64]>>(
    points: &[V],
    reference: &[f64],
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), MetricsError> {
    let pts = shifted(points, reference)?;
    if pts.is_empty() || samples == 0 {
        return Ok((0.0, 0.0));
    }
    let m = reference.len();
    let upper: Vec<f64> = (0..m)
        .map(|j| pts.iter().map(|p| p[j]).fold(0.0, f64::max))
        .collect();
    let box_volume: f64 = upper.iter().product();
    if box_volume == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut sample = vec![0.0; m];
    let mut hits = 0usize;
    for _ in 0..samples {
        for (s, u) in sample.iter_mut().zip(&upper) {
            *s = rng.random::<f64>() * u;
        }
        if pts.iter().any(|p| p.iter().zip(&sample).all(|(a, s)| a >= s)) {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    let se = (frac * (1.0 - frac) / samples as f64).sqrt();
    Ok((frac * box_volume, se * box_volume))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered_modes: BTreeSet<usize>,
    pub coverage_fraction: f64,
    pub collapsed: bool,
    pub k: usize,
}

impl CoverageReport {
    pub fn from_modes(covered_modes: BTreeSet<usize>, k: usize) -> Self {
        let n = covered_modes.len();
        Self {
            coverage_fraction: if k == 0 { 0.0 } else { n as f64 / k as f64 },
            // n < 0.7 k, in integers.
            collapsed: 10 * n < 7 * k,
            covered_modes,
            k,
        }
    }

    pub fn covered(&self) -> usize {
        self.covered_modes.len()
    }
}

pub fn mode_coverage<'a, I>(solutions: I, landscape: &PreferenceLandscape) -> Result<CoverageReport, MetricsError>
where
    I: IntoIterator<Item = &'a LowRankGenome>,
{
    let mut covered = BTreeSet::new();
    for g in solutions {
        if let Some(i) = landscape.mode_of(g)? {
            covered.insert(i);
        }
    }
    Ok(CoverageReport::from_modes(covered, landscape.k()))
}

fn check_positive(name: &'static str, value: f64) -> Result<(), MetricsError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(MetricsError::Parameter { name, value })
    }
}

/// Expected covered modes `k * (1 - exp(-mu*T / (g^m * c)))`.
pub fn coverage_prediction(mu: usize, t: usize, g: usize, m: usize, c: f64, k: usize) -> Result<f64, MetricsError> {
    for (name, v) in [("mu", mu), ("T", t), ("g", g), ("m", m), ("k", k)] {
        check_positive(name, v as f64)?;
    }
    check_positive("c", c)?;
    let cells = (g as f64).powi(m as i32);
    Ok(k as f64 * (1.0 - (-(mu as f64) * t as f64 / (cells * c)).exp()))
}

/// Covered modes per generation from archive snapshots keyed by generation.
pub fn empirical_coverage_curve(
    snapshots: &BTreeMap<usize, Vec<ArchiveRecord>>,
    generations: usize,
    landscape: &PreferenceLandscape,
) -> Result<Vec<usize>, MetricsError> {
    let missing: Vec<usize> = (0..=generations).filter(|t| !snapshots.contains_key(t)).collect();
    if !missing.is_empty() {
        return Err(MetricsError::MissingSnapshots(missing));
    }
    (0..=generations)
        .map(|t| {
            let genomes = snapshots[&t]
                .iter()
                .map(|r| LowRankGenome::from_snapshot(&r.genome))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| MetricsError::Snapshot(e.to_string()))?;
            Ok(mode_coverage(&genomes, landscape)?.covered())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{default_shapes, random_init};
    use crate::landscape::LandscapeConfig;
    use crate::selection::nondominated_indices;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Inclusion-exclusion over all non-empty subsets.
    fn hv_inclusion_exclusion(points: &[Vec<f64>]) -> f64 {
        let n = points.len();
        let m = points.first().map_or(0, Vec::len);
        let mut total = 0.0;
        for mask in 1u32..(1 << n) {
            let mut corner = vec![f64::INFINITY; m];
            for (i, p) in points.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    for (c, v) in corner.iter_mut().zip(p) {
                        *c = c.min(*v);
                    }
                }
            }
            let vol: f64 = corner.iter().product();
            if mask.count_ones() % 2 == 1 {
                total += vol;
            } else {
                total -= vol;
            }
        }
        total
    }

    #[test]
    fn hv_examples() {
        assert_eq!(hypervolume(&[vec![1.0, 1.0, 1.0]], &[0.0, 0.0, 0.0]).unwrap(), 1.0);
        let hv = hypervolume(&[vec![1.0, 0.5], vec![0.5, 1.0]], &[0.0, 0.0]).unwrap();
        assert!((hv - 0.75).abs() < 1e-15);
        assert_eq!(hypervolume::<Vec<f64>>(&[], &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(
            hypervolume(&[vec![0.5; 4]], &[0.0; 4]),
            Err(MetricsError::UnsupportedDimension(4))
        );
        // Points below the reference are discarded.
        let hv = hypervolume(&[vec![0.5, 0.5], vec![-0.1, 2.0]], &[0.0, 0.0]).unwrap();
        assert_eq!(hv, 0.25);
    }

    #[test]
    fn hv_with_nonzero_reference() {
        let hv = hypervolume(&[vec![0.6, 0.7, 0.8]], &[0.1, 0.2, 0.3]).unwrap();
        assert!((hv - 0.125).abs() < 1e-12);
    }

    #[test]
    fn hv_3d_matches_inclusion_exclusion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let n = rng.random_range(1..=5);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
                .collect();
            let exact = hypervolume(&pts, &[0.0; 3]).unwrap();
            assert!((exact - hv_inclusion_exclusion(&pts)).abs() < 1e-9);
        }
    }

    #[test]
    fn hv_3d_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..5 {
            let pts: Vec<Vec<f64>> = (0..30)
                .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
                .collect();
            let exact = hypervolume(&pts, &[0.0; 3]).unwrap();
            let (est, se) = hypervolume_mc(&pts, &[0.0; 3], 200_000, trial).unwrap();
            assert!((exact - est).abs() <= 3.0 * se, "{exact} vs {est} ± {se}");
        }
    }

    proptest! {
        #[test]
        fn hv_ignores_dominated_points(
            pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..40)
        ) {
            let nd: Vec<Vec<f64>> = nondominated_indices(&pts).into_iter().map(|i| pts[i].clone()).collect();
            let a = hypervolume(&pts, &[0.0; 3]).unwrap();
            let b = hypervolume(&nd, &[0.0; 3]).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn hv_monotone_under_addition(
            pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 0..30),
            extra in prop::collection::vec(0.0f64..1.0, 3),
        ) {
            let before = hypervolume(&pts, &[0.0; 3]).unwrap();
            let mut more = pts.clone();
            more.push(extra);
            prop_assert!(hypervolume(&more, &[0.0; 3]).unwrap() >= before - 1e-12);
        }

        #[test]
        fn hv_2d_order_invariant(
            mut pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 0..30)
        ) {
            let a = hypervolume(&pts, &[0.0; 2]).unwrap();
            pts.reverse();
            prop_assert!((a - hypervolume(&pts, &[0.0; 2]).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn prediction_monotone(mu in 1usize..64, t in 1usize..100, c in 0.5f64..8.0) {
            let base = coverage_prediction(mu, t, 10, 3, c, 50).unwrap();
            prop_assert!(coverage_prediction(mu + 1, t, 10, 3, c, 50).unwrap() >= base);
            prop_assert!(coverage_prediction(mu, t + 1, 10, 3, c, 50).unwrap() >= base);
            prop_assert!(coverage_prediction(mu, t, 11, 3, c, 50).unwrap() <= base);
            prop_assert!(coverage_prediction(mu, t, 10, 3, c * 1.5, 50).unwrap() <= base);
        }
    }

    #[test]
    fn prediction_values() {
        let p = coverage_prediction(32, 50, 10, 3, 4.0, 50).unwrap();
        assert!((p - 50.0 * (1.0 - (-0.4f64).exp())).abs() < 1e-12);
        assert!((p - 16.484).abs() < 1e-3);
        let p1 = coverage_prediction(32, 50, 10, 3, 1.0, 50).unwrap() / 50.0;
        assert!((p1 - 0.7981).abs() < 1e-4);
        let sat = coverage_prediction(32, 1_000_000, 10, 3, 4.0, 50).unwrap();
        assert!((sat - 50.0).abs() < 1e-9);
        assert!(coverage_prediction(0, 50, 10, 3, 4.0, 50).is_err());
        assert!(coverage_prediction(32, 50, 10, 3, 0.0, 50).is_err());
    }

    fn landscape(k: usize) -> PreferenceLandscape {
        let cfg = LandscapeConfig { k, ..Default::default() };
        PreferenceLandscape::build(&cfg, 512).unwrap()
    }

    fn at_centers(l: &PreferenceLandscape, which: impl Iterator<Item = usize>) -> Vec<LowRankGenome> {
        let template = random_init(&default_shapes(), 0.01, 32.0, 0).unwrap();
        which
            .map(|i| l.preimage(&template, &l.modes()[i].center).unwrap())
            .collect()
    }

    #[test]
    fn coverage_examples() {
        let l = landscape(10);
        let empty = mode_coverage(&[], &l).unwrap();
        assert_eq!((empty.covered(), empty.collapsed), (0, true));
        let all = mode_coverage(&at_centers(&l, 0..10), &l).unwrap();
        assert_eq!((all.coverage_fraction, all.collapsed), (1.0, false));
        let seven = mode_coverage(&at_centers(&l, 0..7), &l).unwrap();
        assert_eq!((seven.coverage_fraction, seven.collapsed), (0.7, false));
        let six = mode_coverage(&at_centers(&l, 0..6), &l).unwrap();
        assert!(six.collapsed);
    }

    #[test]
    fn coverage_curve_requires_every_generation() {
        let l = landscape(3);
        let mut snaps = BTreeMap::new();
        snaps.insert(0, Vec::new());
        snaps.insert(2, Vec::new());
        assert_eq!(
            empirical_coverage_curve(&snaps, 3, &l),
            Err(MetricsError::MissingSnapshots(vec![1, 3]))
        );
        snaps.insert(1, Vec::new());
        assert_eq!(empirical_coverage_curve(&snaps, 2, &l).unwrap(), vec![0, 0, 0]);
    }
}
