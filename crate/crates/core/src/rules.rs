//! Replacement rules of the B-tree gap urns.
//!
//! A fringe node of type `k` holds `m+k-2` keys and owns `m+k-1` gaps.
//! Inserting into it moves the fringe composition by the increment `w_k`;
//! in gap coordinates the same move is `P w_k`, which is row `k` of the
//! replacement matrix (`P` is the diagonal of gap counts per node type).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::composition::{CompositionVector, Coordinates};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Splits a saturated fringe node after locating the insertion point;
    /// fringe nodes hold `m-1..=2m-2` keys.
    Optimistic,
    /// Splits saturated nodes on the way down; fringe nodes hold
    /// `m-1..=2m-1` keys.
    Prudent,
}

impl Algorithm {
    /// Number of fringe node types for parameter `m`.
    pub fn dim(self, m: usize) -> usize {
        match self {
            Algorithm::Optimistic => m,
            Algorithm::Prudent => m + 1,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Optimistic => "optimistic",
            Algorithm::Prudent => "prudent",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimistic" => Ok(Algorithm::Optimistic),
            "prudent" => Ok(Algorithm::Prudent),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm `{other}` (expected optimistic or prudent)"
            ))),
        }
    }
}

/// The replacement structure shared by the tree simulator and the urn chains.
///
/// Immutable once built; every invariant is checked by [`make_rule`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplacementRule {
    pub m: usize,
    pub algorithm: Algorithm,
    pub dim: usize,
    pub rows: Vec<Vec<i64>>,
    pub increments: Vec<Vec<i64>>,
    pub gap_diag: Vec<i64>,
    pub balance: i64,
    #[serde(skip)]
    moves: Vec<Vec<(usize, i64)>>,
}

/// Builds the replacement rule of the gap urn for parameter `m`.
pub fn make_rule(m: usize, algorithm: Algorithm) -> Result<ReplacementRule> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "B-tree parameter m must be at least 2, got {m}"
        )));
    }
    let dim = algorithm.dim(m);
    let gap_diag: Vec<i64> = (0..dim).map(|i| (m + i) as i64).collect();

    let mut increments = vec![vec![0i64; dim]; dim];
    for (k, w) in increments.iter_mut().enumerate().take(dim - 1) {
        w[k] = -1;
        w[k + 1] = 1;
    }
    let last = &mut increments[dim - 1];
    last[dim - 1] = -1;
    match algorithm {
        // a saturated node splits into two nodes of type 1
        Algorithm::Optimistic => last[0] += 2,
        // a saturated node splits into one node of type 1 and one of type 2
        Algorithm::Prudent => {
            last[0] += 1;
            last[1] += 1;
        }
    }

    let rows: Vec<Vec<i64>> = increments
        .iter()
        .map(|w| w.iter().zip(&gap_diag).map(|(a, p)| a * p).collect())
        .collect();
    let moves = rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &a)| a != 0)
                .map(|(j, &a)| (j, a))
                .collect()
        })
        .collect();

    let rule = ReplacementRule {
        m,
        algorithm,
        dim,
        balance: rows[0].iter().sum(),
        rows,
        increments,
        gap_diag,
        moves,
    };
    rule.validate()?;
    Ok(rule)
}

impl ReplacementRule {
    /// Checks the four structural invariants: unit balance, rows equal to
    /// `P w_k`, sign pattern, and column divisibility.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Invariant(what));
        if self.balance != 1 {
            return bad(format!("balance is {}, expected 1", self.balance));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.iter().sum::<i64>() != self.balance {
                return bad(format!("row {} does not sum to the balance", k + 1));
            }
            for (j, &a) in row.iter().enumerate() {
                if a != self.gap_diag[j] * self.increments[k][j] {
                    return bad(format!("row {} differs from P w_{}", k + 1, k + 1));
                }
                if (j == k && a >= 0) || (j != k && a < 0) {
                    return bad(format!("sign pattern broken at ({}, {})", k + 1, j + 1));
                }
            }
        }
        for j in 0..self.dim {
            let modulus = self.rows[j][j].abs();
            if self.rows.iter().any(|row| row[j] % modulus != 0) {
                return bad(format!("column {} is not tenable", j + 1));
            }
        }
        Ok(())
    }

    /// Divisibility modulus of color `k` (1-based): `|a_kk|`.
    pub fn modulus(&self, k: usize) -> u64 {
        self.rows[k - 1][k - 1].unsigned_abs()
    }

    /// Nonzero entries of row `color` (0-based), as `(column, delta)`.
    pub(crate) fn moves(&self, color: usize) -> &[(usize, i64)] {
        &self.moves[color]
    }

    /// Gap composition `P e_1` of a B-tree whose root is a single fringe
    /// node of type 1.
    pub fn btree_start(&self) -> CompositionVector {
        let mut counts = vec![0; self.dim];
        counts[0] = self.m as u64;
        CompositionVector::gaps(counts)
    }

    /// Gap coordinates of the fringe composition `v`, i.e. `P v`.
    pub fn scale_by_gaps(&self, v: &[u64]) -> CompositionVector {
        CompositionVector::gaps(
            v.iter()
                .zip(&self.gap_diag)
                .map(|(x, &p)| x * p as u64)
                .collect(),
        )
    }
}

/// True iff every gap count of `initial` is a multiple of its color's
/// modulus. The column condition is already a rule invariant.
pub fn check_tenable(rule: &ReplacementRule, initial: &CompositionVector) -> Result<bool> {
    if initial.coords != Coordinates::Gap {
        return Err(Error::InvalidInput(
            "tenability is defined on gap coordinates".into(),
        ));
    }
    if initial.dim() != rule.dim {
        return Err(Error::InvalidInput(format!(
            "composition has dimension {}, rule has {}",
            initial.dim(),
            rule.dim
        )));
    }
    if initial.is_zero() {
        return Err(Error::InvalidInput("the urn is empty".into()));
    }
    Ok(initial
        .counts
        .iter()
        .enumerate()
        .all(|(i, &g)| g % rule.modulus(i + 1) == 0))
}
