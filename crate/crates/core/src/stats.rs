//! Nonparametric comparison statistics: Wilcoxon signed-rank, Friedman,
//! Holm step-down correction, Vargha-Delaney A12, and median/IQR.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} paired values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("friedman test needs at least 3 algorithms and 2 blocks, got {algos} x {blocks}")]
    FriedmanShape { blocks: usize, algos: usize },
    #[error("row {0} has a different number of algorithms")]
    Ragged(usize),
    #[error("p-value {0} outside [0, 1]")]
    PValue(f64),
    #[error("empty sample")]
    Empty,
}

/// Samples up to this size get an exact null distribution.
pub const EXACT_LIMIT: usize = 25;
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub zeros_dropped: usize,
    pub exact: bool,
    /// Every difference was zero.
    pub degenerate: bool,
}

/// Average ranks (1-based) of `values`, ascending.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on `a - b`.
///
/// Fewer than [`MIN_PAIRS`] nonzero differences still get an exact p-value.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < MIN_PAIRS {
        return Err(StatsError::TooFew { need: MIN_PAIRS, got: a.len() });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let zeros_dropped = a.len() - diffs.len();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: 1.0,
            n: 0,
            zeros_dropped,
            exact: true,
            degenerate: true,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);

    let (p_value, exact) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, w), true)
    } else {
        let mean = total / 2.0;
        let tie_term: f64 = tie_sizes(&abs).map(|t| t * t * t - t).sum::<f64>() / 48.0;
        let var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0 - tie_term;
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = ((w - mean + 0.5) / var.sqrt()).min(0.0);
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            (2.0 * normal.cdf(z)).min(1.0)
        };
        (p, false)
    };
    Ok(WilcoxonResult {
        statistic: w,
        w_plus,
        w_minus,
        p_value,
        n,
        zeros_dropped,
        exact,
        degenerate: false,
    })
}

/// Sizes of runs of equal values.
fn tie_sizes(values: &[f64]) -> impl Iterator<Item = f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|v| **v == sorted[i]).count();
        sizes.push(j as f64);
        i += j;
    }
    sizes.into_iter()
}

/// `min(1, 2 * P(T <= w))` where `T` is the sum of a uniformly random subset of `ranks`.
///
/// Ranks are half-integers, so the subset-sum distribution is tabulated over doubled ranks.
fn exact_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let limit = (w * 2.0).round() as usize;
    let below: f64 = counts[..=limit.min(max)].iter().sum();
    let all = 2f64.powi(ranks.len() as i32);
    (2.0 * below / all).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Mean within-block rank per algorithm; rank 1 is the largest value.
    pub mean_ranks: Vec<f64>,
    pub degenerate: bool,
}

/// Friedman test on an `n_blocks x k_algos` matrix (rows are blocks).
pub fn friedman_test(matrix: &[Vec<f64>]) -> Result<FriedmanResult, StatsError> {
    let n = matrix.len();
    let k = matrix.first().map_or(0, Vec::len);
    if n < 2 || k < 3 {
        return Err(StatsError::FriedmanShape { blocks: n, algos: k });
    }
    let mut rank_sums = vec![0.0; k];
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(StatsError::Ragged(i));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        let negated: Vec<f64> = row.iter().map(|v| -v).collect();
        for (s, r) in rank_sums.iter_mut().zip(average_ranks(&negated)) {
            *s += r;
        }
    }
    let mean_ranks: Vec<f64> = rank_sums.iter().map(|s| s / n as f64).collect();
    let centre = (k + 1) as f64 / 2.0;
    let statistic = 12.0 * n as f64 / (k * (k + 1)) as f64
        * mean_ranks.iter().map(|r| (r - centre).powi(2)).sum::<f64>();
    let degenerate = matrix.iter().all(|row| row.iter().all(|v| *v == row[0]));
    let df = k - 1;
    let p_value = if degenerate || statistic <= 0.0 {
        1.0
    } else {
        let chi = ChiSquared::new(df as f64).expect("positive df");
        chi.sf(statistic).clamp(0.0, 1.0)
    };
    Ok(FriedmanResult {
        statistic: if degenerate { 0.0 } else { statistic },
        df,
        p_value,
        mean_ranks,
        degenerate,
    })
}

/// Holm step-down adjusted p-values, in input order.
pub fn holm_correction(pvals: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(&p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::PValue(p));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0_f64;
    for (j, &i) in order.iter().enumerate() {
        running = running.max(((m - j) as f64 * pvals[i]).min(1.0));
        adjusted[i] = running;
    }
    Ok(adjusted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn of(a12: f64) -> Self {
        if !(0.29..=0.71).contains(&a12) {
            Self::Large
        } else if !(0.36..=0.64).contains(&a12) {
            Self::Medium
        } else if !(0.44..=0.56).contains(&a12) {
            Self::Small
        } else {
            Self::Negligible
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Negligible => "negligible",
            Self::Small => "small",
            Self::Medium => "medium",
            Self::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub a12: f64,
    pub magnitude: Magnitude,
}

/// Probability that a draw from `x` exceeds a draw from `y`, ties counted half.
pub fn vargha_delaney_a12(x: &[f64], y: &[f64]) -> Result<EffectSize, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut score = 0.0;
    for xi in x {
        for yj in y {
            if xi > yj {
                score += 1.0;
            } else if xi == yj {
                score += 0.5;
            }
        }
    }
    let a12 = score / (x.len() * y.len()) as f64;
    Ok(EffectSize { a12, magnitude: Magnitude::of(a12) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Median and inclusive (linear interpolation) quartiles.
pub fn median_iqr(values: &[f64]) -> Result<Summary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Ok(Summary { median: q(0.5), q1: q(0.25), q3: q(0.75) })
}
