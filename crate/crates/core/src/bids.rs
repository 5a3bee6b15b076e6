//! Conversion of reviewer bids into similarity factors.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::{PaperId, ReviewerId};
use crate::similarity::{Cell, MatrixError, Provenance, SimilarityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bid {
    ExpertWilling,
    Expert,
    CapableNotExpert,
    NotWilling,
    ConflictOfInterest,
}

impl Bid {
    pub const ALL: [Bid; 5] = [
        Bid::ExpertWilling,
        Bid::Expert,
        Bid::CapableNotExpert,
        Bid::NotWilling,
        Bid::ConflictOfInterest,
    ];

    /// Quantile rank used by dynamic conversion; `None` for levels that keep
    /// their static value.
    fn quantile_rank(self) -> Option<f64> {
        match self {
            Bid::ExpertWilling => Some(1.0),
            Bid::Expert => Some(0.75),
            Bid::CapableNotExpert => Some(0.5),
            Bid::NotWilling | Bid::ConflictOfInterest => None,
        }
    }
}

impl fmt::Display for Bid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BidMode {
    #[default]
    Static,
    Dynamic,
}

pub fn static_bid_to_similarity(b: Bid) -> f64 {
    match b {
        Bid::ExpertWilling => 1.0,
        Bid::Expert => 0.9,
        Bid::CapableNotExpert => 0.6,
        Bid::NotWilling => 0.1,
        Bid::ConflictOfInterest => 0.0,
    }
}

/// Nearest-rank quantile: the value at 1-based position `ceil(q·n)` of the sorted list.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Raises the static value of a positive bid to the matching quantile of the
/// paper's non-zero computed similarities, so a bid never ranks below what the
/// keyword match alone would give on that paper.
pub fn dynamic_bid_to_similarity(b: Bid, computed_for_paper: &[f64]) -> f64 {
    let base = static_bid_to_similarity(b);
    let Some(q) = b.quantile_rank() else {
        return base;
    };
    let mut values: Vec<f64> = computed_for_paper
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .collect();
    if values.is_empty() {
        return base;
    }
    values.sort_by(f64::total_cmp);
    base.max(nearest_rank(&values, q))
}

/// Overwrites every bid cell. A `ConflictOfInterest` bid yields a `Conflict`
/// cell; all other bids yield `Bid` cells. Cells without a bid are untouched.
pub fn apply_bids<'a, I>(
    matrix: &SimilarityMatrix,
    bids: I,
    mode: BidMode,
) -> Result<SimilarityMatrix, MatrixError>
where
    I: IntoIterator<Item = (&'a PaperId, &'a ReviewerId, Bid)>,
{
    let mut resolved = Vec::new();
    for (p, r, b) in bids {
        resolved.push((matrix.paper_index(p)?, matrix.reviewer_index(r)?, b));
    }
    let mut out = matrix.clone();
    if resolved.is_empty() {
        return Ok(out);
    }
    // Computed values per row are read from the input, so bids on the same
    // paper do not influence each other.
    let mut row_cache: HashMap<usize, Vec<f64>> = HashMap::new();
    for (i, j, b) in resolved {
        let cell = match (b, mode) {
            (Bid::ConflictOfInterest, _) => Cell::CONFLICT,
            (_, BidMode::Static) => Cell {
                factor: static_bid_to_similarity(b),
                provenance: Provenance::Bid,
            },
            (_, BidMode::Dynamic) => {
                let row = row_cache.entry(i).or_insert_with(|| {
                    matrix
                        .row(i)
                        .iter()
                        .filter(|c| c.provenance == Provenance::Computed)
                        .map(|c| c.factor)
                        .collect()
                });
                Cell {
                    factor: dynamic_bid_to_similarity(b, row),
                    provenance: Provenance::Bid,
                }
            }
        };
        *out.cell_mut(i, j) = cell;
    }
    Ok(out)
}
