//! Taxonomy-based similarity between keywords, keyword sets, and the merged
//! paper × reviewer similarity matrix.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bids::{apply_bids, Bid, BidMode};
use crate::ids::{PaperId, ReviewerId};
use crate::keywords::{
    expand_reviewer_selection, reduce_parent_child, restrict_to_closest, CompetenceLevel,
    PaperKeywordSet, ReviewerSelection, RuleError, DEFAULT_DEPTH_THRESHOLD,
};
use crate::par::{self, Exec};
use crate::taxonomy::{KeywordId, Taxonomy, TaxonomyError};

/// A similarity measure between two taxonomy nodes, addressed by arena position.
pub trait KeywordMeasure: Sync {
    fn similarity(&self, t: &Taxonomy, a: usize, b: usize) -> f64;
}

/// `2·depth(lca) / (depth(a) + depth(b))`, and 1 for identical nodes.
#[derive(Debug, Clone, Copy, Default)]
pub struct DepthRatio;

impl KeywordMeasure for DepthRatio {
    fn similarity(&self, t: &Taxonomy, a: usize, b: usize) -> f64 {
        if a == b {
            return 1.0;
        }
        let denom = t.depth_at(a) + t.depth_at(b);
        if denom == 0 {
            return 1.0;
        }
        2.0 * t.depth_at(t.lca_pos(a, b)) as f64 / denom as f64
    }
}

pub fn keyword_pair_similarity(
    t: &Taxonomy,
    a: &KeywordId,
    b: &KeywordId,
) -> Result<f64, TaxonomyError> {
    Ok(DepthRatio.similarity(t, t.position(a)?, t.position(b)?))
}

/// Multipliers applied to a pair similarity according to the reviewer's
/// competence on the matched keyword.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelWeights {
    pub high: f64,
    pub medium: f64,
    pub low: f64,
}

impl Default for LevelWeights {
    fn default() -> Self {
        LevelWeights {
            high: 1.0,
            medium: 0.75,
            low: 0.5,
        }
    }
}

impl LevelWeights {
    pub fn level_weight(&self, level: CompetenceLevel) -> f64 {
        match level {
            CompetenceLevel::High => self.high,
            CompetenceLevel::Medium => self.medium,
            CompetenceLevel::Low => self.low,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.high, self.medium, self.low]
            .iter()
            .all(|w| *w > 0.0 && *w <= 1.0)
    }
}

/// Mean over paper keywords of the best weighted match in the reviewer selection.
pub fn set_similarity(
    t: &Taxonomy,
    paper: &PaperKeywordSet,
    sel: &ReviewerSelection,
    weights: &LevelWeights,
) -> Result<f64, RuleError> {
    set_similarity_with(&DepthRatio, t, paper, sel, weights)
}

pub fn set_similarity_with<M: KeywordMeasure + ?Sized>(
    measure: &M,
    t: &Taxonomy,
    paper: &PaperKeywordSet,
    sel: &ReviewerSelection,
    weights: &LevelWeights,
) -> Result<f64, RuleError> {
    if paper.is_empty() {
        return Err(RuleError::EmptyPaperSet);
    }
    let reviewer = sel
        .iter()
        .map(|(k, l)| Ok((t.position(k)?, weights.level_weight(l))))
        .collect::<Result<Vec<_>, TaxonomyError>>()?;
    let mut total = 0.0;
    for p in paper.iter() {
        let p = t.position(p)?;
        let best = reviewer
            .iter()
            .map(|&(r, w)| measure.similarity(t, p, r) * w)
            .fold(0.0, f64::max);
        total += best;
    }
    Ok((total / paper.len() as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Computed,
    Bid,
    Conflict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub factor: f64,
    pub provenance: Provenance,
}

impl Cell {
    pub const CONFLICT: Cell = Cell {
        factor: 0.0,
        provenance: Provenance::Conflict,
    };

    pub fn computed(factor: f64) -> Self {
        Cell {
            factor,
            provenance: Provenance::Computed,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("unknown paper `{0}`")]
    UnknownPaper(String),
    #[error("unknown reviewer `{0}`")]
    UnknownReviewer(String),
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
}

impl MatrixError {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixError::UnknownPaper(_) => "UnknownPaper",
            MatrixError::UnknownReviewer(_) => "UnknownReviewer",
            MatrixError::Shape(_) => "MalformedDocument",
        }
    }
}

/// Paper × reviewer grid of similarity factors with per-cell provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct SimilarityMatrix {
    papers: Vec<PaperId>,
    reviewers: Vec<ReviewerId>,
    cells: Vec<Cell>,
    paper_index: HashMap<PaperId, usize>,
    reviewer_index: HashMap<ReviewerId, usize>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    papers: Vec<PaperId>,
    reviewers: Vec<ReviewerId>,
    cells: Vec<Vec<Cell>>,
}

impl TryFrom<MatrixRepr> for SimilarityMatrix {
    type Error = MatrixError;

    fn try_from(r: MatrixRepr) -> Result<Self, MatrixError> {
        if r.cells.len() != r.papers.len() || r.cells.iter().any(|row| row.len() != r.reviewers.len())
        {
            return Err(MatrixError::Shape(format!(
                "expected {}x{} cells",
                r.papers.len(),
                r.reviewers.len()
            )));
        }
        SimilarityMatrix::from_cells(r.papers, r.reviewers, r.cells.into_iter().flatten().collect())
    }
}

impl From<SimilarityMatrix> for MatrixRepr {
    fn from(m: SimilarityMatrix) -> Self {
        let width = m.reviewers.len().max(1);
        let cells = if m.reviewers.is_empty() {
            vec![Vec::new(); m.papers.len()]
        } else {
            m.cells.chunks(width).map(|c| c.to_vec()).collect()
        };
        MatrixRepr {
            papers: m.papers,
            reviewers: m.reviewers,
            cells,
        }
    }
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major cells.
    pub fn from_cells(
        papers: Vec<PaperId>,
        reviewers: Vec<ReviewerId>,
        cells: Vec<Cell>,
    ) -> Result<Self, MatrixError> {
        if cells.len() != papers.len() * reviewers.len() {
            return Err(MatrixError::Shape(format!(
                "{} cells for {}x{}",
                cells.len(),
                papers.len(),
                reviewers.len()
            )));
        }
        if let Some(c) = cells
            .iter()
            .find(|c| !(0.0..=1.0).contains(&c.factor) || (c.provenance == Provenance::Conflict && c.factor != 0.0))
        {
            return Err(MatrixError::Shape(format!("invalid cell {c:?}")));
        }
        let paper_index: HashMap<_, _> =
            papers.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let reviewer_index: HashMap<_, _> =
            reviewers.iter().enumerate().map(|(i, r)| (r.clone(), i)).collect();
        if paper_index.len() != papers.len() || reviewer_index.len() != reviewers.len() {
            return Err(MatrixError::Shape("duplicate paper or reviewer id".into()));
        }
        Ok(SimilarityMatrix {
            papers,
            reviewers,
            cells,
            paper_index,
            reviewer_index,
        })
    }

    /// A matrix of `Computed` cells from row-major factors.
    pub fn from_factors(
        papers: Vec<PaperId>,
        reviewers: Vec<ReviewerId>,
        factors: Vec<f64>,
    ) -> Result<Self, MatrixError> {
        Self::from_cells(papers, reviewers, factors.into_iter().map(Cell::computed).collect())
    }

    pub fn papers(&self) -> &[PaperId] {
        &self.papers
    }

    pub fn reviewers(&self) -> &[ReviewerId] {
        &self.reviewers
    }

    pub fn rows(&self) -> usize {
        self.papers.len()
    }

    pub fn cols(&self) -> usize {
        self.reviewers.len()
    }

    pub fn paper_index(&self, p: &PaperId) -> Result<usize, MatrixError> {
        self.paper_index
            .get(p)
            .copied()
            .ok_or_else(|| MatrixError::UnknownPaper(p.to_string()))
    }

    pub fn reviewer_index(&self, r: &ReviewerId) -> Result<usize, MatrixError> {
        self.reviewer_index
            .get(r)
            .copied()
            .ok_or_else(|| MatrixError::UnknownReviewer(r.to_string()))
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.reviewers.len() + col]
    }

    pub fn cell_mut(&mut self, row: usize, col: usize) -> &mut Cell {
        let w = self.reviewers.len();
        &mut self.cells[row * w + col]
    }

    pub fn get(&self, p: &PaperId, r: &ReviewerId) -> Result<Cell, MatrixError> {
        Ok(self.cell(self.paper_index(p)?, self.reviewer_index(r)?))
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let w = self.reviewers.len();
        &self.cells[row * w..(row + 1) * w]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn is_conflict(&self, row: usize, col: usize) -> bool {
        self.cell(row, col).provenance == Provenance::Conflict
    }

    /// Zeroes every listed pair and marks it `Conflict`.
    pub fn apply_conflicts<'a, I>(&mut self, pairs: I) -> Result<(), MatrixError>
    where
        I: IntoIterator<Item = (&'a PaperId, &'a ReviewerId)>,
    {
        for (p, r) in pairs {
            let (i, j) = (self.paper_index(p)?, self.reviewer_index(r)?);
            *self.cell_mut(i, j) = Cell::CONFLICT;
        }
        Ok(())
    }
}

/// Switches and weights for the keyword rules and the set measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleOptions {
    pub depth_threshold: usize,
    pub reduce_paper_sets: bool,
    pub restrict_to_closest: bool,
    pub level_weights: LevelWeights,
}

impl Default for RuleOptions {
    fn default() -> Self {
        RuleOptions {
            depth_threshold: DEFAULT_DEPTH_THRESHOLD,
            reduce_paper_sets: true,
            restrict_to_closest: true,
            level_weights: LevelWeights::default(),
        }
    }
}

/// Everything the matrix builder needs, borrowed from a conference.
pub struct MatrixInputs<'a> {
    pub papers: Vec<(&'a PaperId, &'a PaperKeywordSet)>,
    pub reviewers: Vec<(&'a ReviewerId, &'a ReviewerSelection)>,
    pub bids: Vec<(&'a PaperId, &'a ReviewerId, Bid)>,
    pub bid_mode: BidMode,
    pub conflicts: Vec<(&'a PaperId, &'a ReviewerId)>,
    pub rules: &'a RuleOptions,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("paper `{paper}`: {source}")]
    Paper { paper: String, source: RuleError },
    #[error("reviewer `{reviewer}`: {source}")]
    Reviewer { reviewer: String, source: TaxonomyError },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

impl BuildError {
    pub fn name(&self) -> &'static str {
        match self {
            BuildError::Paper { source, .. } => source.name(),
            BuildError::Reviewer { source, .. } => source.name(),
            BuildError::Matrix(e) => e.name(),
        }
    }
}

/// Keyword-rule output for one side of the matrix, computed once per entity.
fn prepare_papers(
    t: &Taxonomy,
    inputs: &MatrixInputs<'_>,
    exec: Exec,
) -> Result<Vec<PaperKeywordSet>, BuildError> {
    par::try_map_indexed(exec, inputs.papers.len(), |i| {
        let (id, set) = inputs.papers[i];
        let wrap = |source: RuleError| BuildError::Paper {
            paper: id.to_string(),
            source,
        };
        if set.is_empty() {
            return Err(wrap(RuleError::EmptyPaperSet));
        }
        if inputs.rules.reduce_paper_sets {
            reduce_parent_child(t, set).map_err(|e| wrap(e.into()))
        } else {
            set.validate(t).map_err(|e| wrap(e.into()))?;
            Ok(set.clone())
        }
    })
}

fn prepare_reviewers(
    t: &Taxonomy,
    inputs: &MatrixInputs<'_>,
    exec: Exec,
) -> Result<Vec<ReviewerSelection>, BuildError> {
    par::try_map_indexed(exec, inputs.reviewers.len(), |j| {
        let (id, sel) = inputs.reviewers[j];
        expand_reviewer_selection(t, sel, inputs.rules.depth_threshold).map_err(|source| {
            BuildError::Reviewer {
                reviewer: id.to_string(),
                source,
            }
        })
    })
}

/// Computed-only matrix: keyword rules applied, then `set_similarity` per cell.
pub fn compute_similarity_matrix(
    t: &Taxonomy,
    inputs: &MatrixInputs<'_>,
    exec: Exec,
) -> Result<SimilarityMatrix, BuildError> {
    let papers = prepare_papers(t, inputs, exec)?;
    let reviewers = prepare_reviewers(t, inputs, exec)?;
    let rules = inputs.rules;
    let rows = par::try_map_indexed(exec, papers.len(), |i| {
        let paper = &papers[i];
        reviewers
            .iter()
            .map(|sel| {
                let restricted;
                let sel = if rules.restrict_to_closest && !sel.is_empty() {
                    restricted = restrict_to_closest(t, paper, sel)?;
                    &restricted
                } else {
                    sel
                };
                set_similarity(t, paper, sel, &rules.level_weights).map(Cell::computed)
            })
            .collect::<Result<Vec<_>, RuleError>>()
            .map_err(|source| BuildError::Paper {
                paper: inputs.papers[i].0.to_string(),
                source,
            })
    })?;
    Ok(SimilarityMatrix::from_cells(
        inputs.papers.iter().map(|(p, _)| (*p).clone()).collect(),
        inputs.reviewers.iter().map(|(r, _)| (*r).clone()).collect(),
        rows.into_iter().flatten().collect(),
    )?)
}

/// Merged matrix: computed values, overwritten by bids, overwritten by conflicts.
pub fn build_similarity_matrix(
    t: &Taxonomy,
    inputs: &MatrixInputs<'_>,
    exec: Exec,
) -> Result<SimilarityMatrix, BuildError> {
    let computed = compute_similarity_matrix(t, inputs, exec)?;
    let mut merged = apply_bids(&computed, inputs.bids.iter().copied(), inputs.bid_mode)?;
    merged.apply_conflicts(inputs.conflicts.iter().copied())?;
    Ok(merged)
}
