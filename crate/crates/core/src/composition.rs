use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which coordinates a composition vector counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinates {
    /// Fringe nodes per type (the `L` process).
    Fringe,
    /// Gaps per type (the `G` process).
    Gap,
}

impl Coordinates {
    /// CSV column prefix: `l1,l2,...` or `g1,g2,...`.
    pub fn column_prefix(self) -> char {
        match self {
            Coordinates::Fringe => 'l',
            Coordinates::Gap => 'g',
        }
    }
}

/// Per-type counts. Index 0 holds type 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositionVector {
    pub coords: Coordinates,
    pub counts: Vec<u64>,
}

impl CompositionVector {
    pub fn gaps(counts: Vec<u64>) -> Self {
        Self {
            coords: Coordinates::Gap,
            counts,
        }
    }

    pub fn fringe(counts: Vec<u64>) -> Self {
        Self {
            coords: Coordinates::Fringe,
            counts,
        }
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Count of the 1-based type `k`.
    pub fn get(&self, k: usize) -> u64 {
        self.counts[k - 1]
    }

    /// Gap coordinates from fringe coordinates: `G^(k) = (m+k-1) L^(k)`.
    pub fn to_gaps(&self, m: usize) -> CompositionVector {
        match self.coords {
            Coordinates::Gap => self.clone(),
            Coordinates::Fringe => CompositionVector::gaps(
                self.counts
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| (m + i) as u64 * l)
                    .collect(),
            ),
        }
    }

    /// Fringe coordinates from gap coordinates; fails when a gap count is not
    /// a multiple of its node size.
    pub fn to_fringe(&self, m: usize) -> Result<CompositionVector> {
        match self.coords {
            Coordinates::Fringe => Ok(self.clone()),
            Coordinates::Gap => self
                .counts
                .iter()
                .enumerate()
                .map(|(i, &g)| {
                    let size = (m + i) as u64;
                    if g % size == 0 {
                        Ok(g / size)
                    } else {
                        Err(Error::InvalidInput(format!(
                            "gap count {g} of type {} is not a multiple of {size}",
                            i + 1
                        )))
                    }
                })
                .collect::<Result<Vec<_>>>()
                .map(CompositionVector::fringe),
        }
    }
}
