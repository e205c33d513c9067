//! Grid archive over objective space.
//!
//! `[0, 1]^m` is cut into `g^m` cells; each cell keeps at most one solution.
//! A newcomer replaces the occupant only if it dominates it.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::{GenomeError, GenomeSnapshot, LowRankGenome};
use crate::landscape::{ObjectiveVector, PreferenceLandscape};
use crate::rng;
use crate::selection::dominates_unchecked;

#[derive(Debug, Error, PartialEq)]
pub enum ArchiveError {
    #[error("objective {index} = {value} is outside [0, 1]")]
    Range { index: usize, value: f64 },
    #[error("archive expects {expected} objectives, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("grid resolution and objective count must be positive")]
    Resolution,
    #[error("bad archive snapshot: {0}")]
    Snapshot(#[from] GenomeError),
}

/// Cell of `f` on a `g`-per-axis grid: `floor(g * f_j)`, with `f_j = 1` mapped to `g - 1`.
pub fn cell_index(f: &[f64], g: usize) -> Result<Vec<usize>, ArchiveError> {
    if g == 0 {
        return Err(ArchiveError::Resolution);
    }
    f.iter()
        .enumerate()
        .map(|(index, &value)| {
            if !(0.0..=1.0).contains(&value) {
                return Err(ArchiveError::Range { index, value });
            }
            Ok(((g as f64 * value).floor() as usize).min(g - 1))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    Replaced,
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub genome: Arc<LowRankGenome>,
    pub objectives: ObjectiveVector,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridArchive {
    g: usize,
    m: usize,
    cells: BTreeMap<Vec<usize>, ArchiveEntry>,
}

impl GridArchive {
    pub fn new(g: usize, m: usize) -> Result<Self, ArchiveError> {
        if g == 0 || m == 0 {
            return Err(ArchiveError::Resolution);
        }
        Ok(Self {
            g,
            m,
            cells: BTreeMap::new(),
        })
    }

    pub fn resolution(&self) -> usize {
        self.g
    }

    pub fn objectives(&self) -> usize {
        self.m
    }

    /// `g^m`, saturating.
    pub fn capacity(&self) -> usize {
        (0..self.m).fold(1usize, |acc, _| acc.saturating_mul(self.g))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Occupied cells in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &ArchiveEntry)> {
        self.cells.iter()
    }

    pub fn get(&self, cell: &[usize]) -> Option<&ArchiveEntry> {
        self.cells.get(cell)
    }

    pub fn try_insert(
        &mut self,
        genome: Arc<LowRankGenome>,
        f: ObjectiveVector,
        generation: usize,
    ) -> Result<InsertOutcome, ArchiveError> {
        if f.len() != self.m {
            return Err(ArchiveError::Arity {
                expected: self.m,
                got: f.len(),
            });
        }
        let cell = cell_index(&f, self.g)?;
        let entry = ArchiveEntry {
            genome,
            objectives: f,
            generation,
        };
        match self.cells.get_mut(&cell) {
            None => {
                self.cells.insert(cell, entry);
                Ok(InsertOutcome::Inserted)
            }
            Some(occupant) if dominates_unchecked(&entry.objectives, &occupant.objectives) => {
                *occupant = entry;
                Ok(InsertOutcome::Replaced)
            }
            Some(_) => Ok(InsertOutcome::Rejected),
        }
    }

    /// Uniform over occupied cells.
    pub fn sample_partner<R: Rng>(&self, rng: &mut R) -> Option<&ArchiveEntry> {
        if self.cells.is_empty() {
            return None;
        }
        let pick = rng.random_range(0..self.cells.len());
        self.cells.values().nth(pick)
    }

    pub fn sample_partner_seeded(&self, seed: u64) -> Option<&ArchiveEntry> {
        self.sample_partner(&mut rng::stream(seed, &[]))
    }

    pub fn occupancy_stats(&self, landscape: Option<&PreferenceLandscape>) -> OccupancyStats {
        let occupied = self.cells.len();
        let fraction = occupied as f64 / self.capacity() as f64;
        let (per_mode, unassigned) = match landscape {
            None => (Vec::new(), 0),
            Some(l) => {
                let mut per_mode = vec![0; l.k()];
                let mut unassigned = 0;
                for entry in self.cells.values() {
                    match l.mode_of(&entry.genome).ok().flatten() {
                        Some(i) => per_mode[i] += 1,
                        None => unassigned += 1,
                    }
                }
                (per_mode, unassigned)
            }
        };
        OccupancyStats {
            occupied,
            fraction,
            per_mode,
            unassigned,
        }
    }

    pub fn snapshot(&self) -> Vec<ArchiveRecord> {
        self.cells
            .iter()
            .map(|(cell, e)| ArchiveRecord {
                cell: cell.clone(),
                objectives: e.objectives.values().to_vec(),
                generation: e.generation,
                genome: e.genome.to_snapshot(),
            })
            .collect()
    }

    pub fn from_snapshot(g: usize, m: usize, records: &[ArchiveRecord]) -> Result<Self, ArchiveError> {
        let mut archive = Self::new(g, m)?;
        for r in records {
            let f = ObjectiveVector::new(r.objectives.clone()).map_err(|_| ArchiveError::Range {
                index: 0,
                value: f64::NAN,
            })?;
            let genome = LowRankGenome::from_snapshot(&r.genome)?;
            archive.try_insert(Arc::new(genome), f, r.generation)?;
        }
        Ok(archive)
    }
}

/// Occupancy counts; `per_mode` is empty when no landscape was supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyStats {
    pub occupied: usize,
    pub fraction: f64,
    pub per_mode: Vec<usize>,
    pub unassigned: usize,
}

impl OccupancyStats {
    /// Average number of occupied cells per covered mode.
    pub fn cells_per_covered_mode(&self) -> Option<f64> {
        let covered = self.per_mode.iter().filter(|&&c| c > 0).count();
        (covered > 0).then(|| self.per_mode.iter().sum::<usize>() as f64 / covered as f64)
    }
}

/// One line of an archive snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub cell: Vec<usize>,
    pub objectives: Vec<f64>,
    pub generation: usize,
    pub genome: GenomeSnapshot,
}
