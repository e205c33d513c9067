//! Pareto-dominance machinery (maximization): non-dominated sorting,
//! crowding distance, tournaments and NSGA-II truncation.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("objective vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("population is empty")]
    Empty,
    #[error("survivor count must be positive")]
    ZeroMu,
    #[error("cannot select {mu} survivors from {have} candidates")]
    TooFew { have: usize, mu: usize },
    #[error("tournament size must be positive")]
    ZeroTournament,
}

/// `a` dominates `b`: no worse anywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool, SelectionError> {
    if a.len() != b.len() {
        return Err(SelectionError::LengthMismatch(a.len(), b.len()));
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Deb's fast non-dominated sort. Front 0 is non-dominated; members of each
/// front are listed in input order.
pub fn fast_nondominated_sort<V: AsRef<[f64]>>(objs: &[V]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (objs[i].as_ref(), objs[j].as_ref());
            if dominates_unchecked(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Indices of the non-dominated members, in input order.
pub fn nondominated_indices<V: AsRef<[f64]>>(objs: &[V]) -> Vec<usize> {
    (0..objs.len())
        .filter(|&i| {
            !objs
                .iter()
                .any(|o| dominates_unchecked(o.as_ref(), objs[i].as_ref()))
        })
        .collect()
}

/// Crowding distance of each member of one front. Extremes in any objective
/// get `+inf`; interior members sum normalized neighbour gaps, and objectives
/// with zero range contribute nothing.
pub fn crowding_distance<V: AsRef<[f64]>>(front: &[V]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].as_ref().len();
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..m {
        order.sort_by(|&a, &b| front[a].as_ref()[obj].total_cmp(&front[b].as_ref()[obj]));
        let lo = front[order[0]].as_ref()[obj];
        let hi = front[order[n - 1]].as_ref()[obj];
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            let i = order[w];
            if dist[i].is_finite() {
                let gap = front[order[w + 1]].as_ref()[obj] - front[order[w - 1]].as_ref()[obj];
                dist[i] += gap / range;
            }
        }
    }
    dist
}

/// Secondary criterion after front rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Prefer higher crowding distance.
    #[default]
    Crowding,
    /// Ignore crowding; resolve uniformly at random.
    Random,
}

/// Front ranks and crowding distances for a population.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPopulation {
    pub fronts: Vec<Vec<usize>>,
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
}

impl RankedPopulation {
    pub fn new<V: AsRef<[f64]>>(objs: &[V]) -> Self {
        let fronts = fast_nondominated_sort(objs);
        let mut rank = vec![0; objs.len()];
        let mut crowding = vec![0.0; objs.len()];
        for (r, front) in fronts.iter().enumerate() {
            let members: Vec<&[f64]> = front.iter().map(|&i| objs[i].as_ref()).collect();
            for (&i, c) in front.iter().zip(crowding_distance(&members)) {
                rank[i] = r;
                crowding[i] = c;
            }
        }
        Self { fronts, rank, crowding }
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }
}

/// Binary tournament: lower rank wins, then higher crowding, then a fair coin.
pub fn binary_tournament<R: Rng>(pop: &RankedPopulation, rng: &mut R) -> Result<usize, SelectionError> {
    tournament(pop, 2, TieBreak::Crowding, rng)
}

/// Draws `size` contestants uniformly with replacement and returns the winner.
pub fn tournament<R: Rng>(
    pop: &RankedPopulation,
    size: usize,
    tie_break: TieBreak,
    rng: &mut R,
) -> Result<usize, SelectionError> {
    if pop.is_empty() {
        return Err(SelectionError::Empty);
    }
    if size == 0 {
        return Err(SelectionError::ZeroTournament);
    }
    let contestants: Vec<usize> = (0..size).map(|_| rng.random_range(0..pop.len())).collect();
    let key = |i: usize| -> (usize, f64) {
        let c = match tie_break {
            TieBreak::Crowding => pop.crowding[i],
            TieBreak::Random => 0.0,
        };
        (pop.rank[i], c)
    };
    let better = |a: (usize, f64), b: (usize, f64)| a.0 < b.0 || (a.0 == b.0 && a.1 > b.1);
    let mut best = vec![contestants[0]];
    for &c in &contestants[1..] {
        let (kc, kb) = (key(c), key(best[0]));
        if better(kc, kb) {
            best.clear();
            best.push(c);
        } else if !better(kb, kc) {
            best.push(c);
        }
    }
    if best.len() == 1 {
        Ok(best[0])
    } else {
        Ok(best[rng.random_range(0..best.len())])
    }
}

/// NSGA-II truncation to `mu` survivors: whole fronts in rank order, the
/// splitting front cut by descending crowding (ties by input order) or at
/// random. Returned indices are sorted ascending.
pub fn environmental_selection<V: AsRef<[f64]>, R: Rng>(
    objs: &[V],
    mu: usize,
    tie_break: TieBreak,
    rng: &mut R,
) -> Result<Vec<usize>, SelectionError> {
    if mu == 0 {
        return Err(SelectionError::ZeroMu);
    }
    if objs.len() < mu {
        return Err(SelectionError::TooFew { have: objs.len(), mu });
    }
    if objs.len() == mu {
        return Ok((0..mu).collect());
    }
    let mut survivors = Vec::with_capacity(mu);
    for front in fast_nondominated_sort(objs) {
        let room = mu - survivors.len();
        if front.len() <= room {
            survivors.extend_from_slice(&front);
        } else {
            let mut picked = match tie_break {
                TieBreak::Crowding => {
                    let members: Vec<&[f64]> = front.iter().map(|&i| objs[i].as_ref()).collect();
                    let cd = crowding_distance(&members);
                    let mut order: Vec<usize> = (0..front.len()).collect();
                    order.sort_by(|&a, &b| cd[b].total_cmp(&cd[a]));
                    order.into_iter().take(room).map(|w| front[w]).collect::<Vec<_>>()
                }
                TieBreak::Random => {
                    let mut f = front.clone();
                    f.shuffle(rng);
                    f.truncate(room);
                    f
                }
            };
            survivors.append(&mut picked);
        }
        if survivors.len() == mu {
            break;
        }
    }
    survivors.sort_unstable();
    Ok(survivors)
}
