//! Keyword-set rewrite rules applied before similarity calculation.
//!
//! * expansion: a reviewer who claims a general topic at High/Medium is
//!   credited with its direct sub-topics, unless already specific;
//! * reduction: a paper set drops any keyword whose direct child is present;
//! * restriction: a reviewer set is narrowed to the keywords closest to
//!   each paper keyword.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::keyword_pair_similarity;
use crate::taxonomy::{KeywordId, Taxonomy, TaxonomyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CompetenceLevel {
    Low,
    Medium,
    High,
}

impl fmt::Display for CompetenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CompetenceLevel::High => "High",
            CompetenceLevel::Medium => "Medium",
            CompetenceLevel::Low => "Low",
        };
        f.write_str(s)
    }
}

/// Keywords chosen by a reviewer, each with a self-assessed competence level.
///
/// Entries added by [`expand_reviewer_selection`] are marked as derived: they
/// count for similarity but were not stated by the reviewer, so they never
/// trigger expansion themselves. Only the keyword map is serialized; stored
/// selections are always the reviewer's own.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "BTreeMap<KeywordId, CompetenceLevel>", into = "BTreeMap<KeywordId, CompetenceLevel>")]
pub struct ReviewerSelection {
    entries: BTreeMap<KeywordId, CompetenceLevel>,
    derived: BTreeSet<KeywordId>,
}

impl From<BTreeMap<KeywordId, CompetenceLevel>> for ReviewerSelection {
    fn from(entries: BTreeMap<KeywordId, CompetenceLevel>) -> Self {
        ReviewerSelection {
            entries,
            derived: BTreeSet::new(),
        }
    }
}

impl From<ReviewerSelection> for BTreeMap<KeywordId, CompetenceLevel> {
    fn from(sel: ReviewerSelection) -> Self {
        sel.entries
    }
}

impl ReviewerSelection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: &str, level: CompetenceLevel) -> Self {
        self.insert(KeywordId::new(id), level);
        self
    }

    /// Adds or replaces a stated entry.
    pub fn insert(&mut self, id: KeywordId, level: CompetenceLevel) {
        self.derived.remove(&id);
        self.entries.insert(id, level);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &KeywordId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn get(&self, id: &KeywordId) -> Option<CompetenceLevel> {
        self.entries.get(id).copied()
    }

    /// True for entries added by expansion.
    pub fn is_derived(&self, id: &KeywordId) -> bool {
        self.derived.contains(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&KeywordId, CompetenceLevel)> + '_ {
        self.entries.iter().map(|(k, &l)| (k, l))
    }

    /// Entries the reviewer picked, without derived ones.
    pub fn stated(&self) -> impl Iterator<Item = (&KeywordId, CompetenceLevel)> + '_ {
        self.iter().filter(|(k, _)| !self.derived.contains(*k))
    }

    pub fn validate(&self, t: &Taxonomy) -> Result<(), TaxonomyError> {
        for k in self.entries.keys() {
            t.position(k)?;
        }
        Ok(())
    }
}

impl FromIterator<(KeywordId, CompetenceLevel)> for ReviewerSelection {
    fn from_iter<I: IntoIterator<Item = (KeywordId, CompetenceLevel)>>(iter: I) -> Self {
        ReviewerSelection::from(iter.into_iter().collect::<BTreeMap<_, _>>())
    }
}

/// Keywords describing a paper.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaperKeywordSet(pub BTreeSet<KeywordId>);

impl PaperKeywordSet {
    pub fn of(ids: &[&str]) -> Self {
        PaperKeywordSet(ids.iter().map(|s| KeywordId::new(*s)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &KeywordId> + '_ {
        self.0.iter()
    }

    pub fn validate(&self, t: &Taxonomy) -> Result<(), TaxonomyError> {
        for k in &self.0 {
            t.position(k)?;
        }
        Ok(())
    }
}

impl FromIterator<KeywordId> for PaperKeywordSet {
    fn from_iter<I: IntoIterator<Item = KeywordId>>(iter: I) -> Self {
        PaperKeywordSet(iter.into_iter().collect())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("paper keyword set is empty")]
    EmptyPaperSet,
}

impl RuleError {
    pub fn name(&self) -> &'static str {
        match self {
            RuleError::Taxonomy(e) => e.name(),
            RuleError::EmptyPaperSet => "EmptyPaperSet",
        }
    }
}

pub const DEFAULT_DEPTH_THRESHOLD: usize = 2;

/// Adds the direct children of every general High/Medium pick.
///
/// A stated entry `(n, level)` expands when `level >= Medium`,
/// `depth(n) < depth_threshold`, `n` has children, and none of them is already
/// selected. Added children inherit `level` and are marked derived, so they
/// never expand in turn; this makes the operation idempotent.
pub fn expand_reviewer_selection(
    t: &Taxonomy,
    sel: &ReviewerSelection,
    depth_threshold: usize,
) -> Result<ReviewerSelection, TaxonomyError> {
    let mut out = sel.clone();
    for (id, level) in sel.stated() {
        let pos = t.position(id)?;
        if level < CompetenceLevel::Medium || t.depth_at(pos) >= depth_threshold {
            continue;
        }
        let children = t.children_at(pos);
        if children.is_empty() || children.iter().any(|&c| sel.contains(t.id_at(c))) {
            continue;
        }
        for &c in children {
            let child = t.id_at(c);
            if !out.contains(child) {
                out.entries.insert(child.clone(), level);
                out.derived.insert(child.clone());
            }
        }
    }
    Ok(out)
}

/// Drops every keyword that is the direct parent of another keyword in the set.
///
/// This is the fixpoint of removing parents top-down; evaluating against the
/// input set makes the result independent of removal order.
pub fn reduce_parent_child(
    t: &Taxonomy,
    ks: &PaperKeywordSet,
) -> Result<PaperKeywordSet, TaxonomyError> {
    let positions = ks
        .iter()
        .map(|k| t.position(k))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let mut drop = BTreeSet::new();
    for &p in &positions {
        if let Some(parent) = t.parent_at(p) {
            if positions.contains(&parent) {
                drop.insert(parent);
            }
        }
    }
    Ok(positions
        .into_iter()
        .filter(|p| !drop.contains(p))
        .map(|p| t.id_at(p).clone())
        .collect())
}

/// Keeps, for each paper keyword, the reviewer keyword(s) with the highest pair
/// similarity. Ties keep every maximizer.
pub fn restrict_to_closest(
    t: &Taxonomy,
    paper: &PaperKeywordSet,
    sel: &ReviewerSelection,
) -> Result<ReviewerSelection, RuleError> {
    if paper.is_empty() {
        return Err(RuleError::EmptyPaperSet);
    }
    paper.validate(t)?;
    sel.validate(t)?;
    let mut keep = ReviewerSelection::new();
    for p in paper.iter() {
        let mut best = f64::NEG_INFINITY;
        let mut winners: Vec<(&KeywordId, CompetenceLevel)> = Vec::new();
        for (r, level) in sel.iter() {
            let s = keyword_pair_similarity(t, p, r)?;
            if s > best {
                best = s;
                winners.clear();
            }
            if s == best {
                winners.push((r, level));
            }
        }
        for (r, level) in winners {
            keep.entries.insert(r.clone(), level);
            if sel.is_derived(r) {
                keep.derived.insert(r.clone());
            }
        }
    }
    Ok(keep)
}
