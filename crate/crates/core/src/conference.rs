//! Conference input data: papers, reviewers, roster, bids, declared conflicts
//! and engine configuration.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bids::{Bid, BidMode};
use crate::ids::{PaperId, PersonId, ReviewerId};
use crate::keywords::{PaperKeywordSet, ReviewerSelection};
use crate::similarity::RuleOptions;
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    pub id: PersonId,
    pub name: String,
    pub email: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paper {
    pub id: PaperId,
    #[serde(default)]
    pub title: String,
    pub author_ids: Vec<PersonId>,
    pub keywords: PaperKeywordSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reviewer {
    pub person_id: ReviewerId,
    #[serde(default)]
    pub selection: ReviewerSelection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidRecord {
    pub paper_id: PaperId,
    pub reviewer_id: ReviewerId,
    pub level: Bid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredConflict {
    pub paper_id: PaperId,
    pub reviewer_id: ReviewerId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Multipass,
    Greedy,
}

pub const DEFAULT_YEAR_WINDOW: i32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Reviewers required per paper.
    pub k: usize,
    /// Per-reviewer capacity overrides; others get `ceil(k·|P|/|R|)`.
    pub capacities: BTreeMap<ReviewerId, usize>,
    #[serde(flatten)]
    pub rules: RuleOptions,
    pub bid_mode: BidMode,
    pub same_country_rule: bool,
    pub year_window: i32,
    /// Reference year for the historical co-authorship window; the current
    /// calendar year when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current_year: Option<i32>,
    pub solver: SolverKind,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            k: 3,
            capacities: BTreeMap::new(),
            rules: RuleOptions::default(),
            bid_mode: BidMode::Static,
            same_country_rule: false,
            year_window: DEFAULT_YEAR_WINDOW,
            current_year: None,
            solver: SolverKind::Multipass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Conference {
    pub config: Config,
    pub papers: Vec<Paper>,
    pub reviewers: Vec<Reviewer>,
    pub roster: Vec<Person>,
    pub bids: Vec<BidRecord>,
    pub explicit_cois: Vec<DeclaredConflict>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid {entity} `{id}`: {reason}")]
pub struct ValidationError {
    pub entity: &'static str,
    pub id: String,
    pub reason: String,
}

impl ValidationError {
    fn new(entity: &'static str, id: impl ToString, reason: impl Into<String>) -> Self {
        ValidationError {
            entity,
            id: id.to_string(),
            reason: reason.into(),
        }
    }
}

impl Conference {
    pub fn person(&self, id: &PersonId) -> Option<&Person> {
        self.roster.iter().find(|p| &p.id == id)
    }

    pub fn roster_index(&self) -> HashMap<&PersonId, &Person> {
        self.roster.iter().map(|p| (&p.id, p)).collect()
    }

    /// Default per-reviewer capacity, `ceil(k·|P| / |R|)`.
    pub fn default_capacity(&self) -> usize {
        let r = self.reviewers.len();
        if r == 0 {
            return 0;
        }
        (self.config.k * self.papers.len()).div_ceil(r)
    }

    /// Capacity per reviewer, in reviewer order.
    pub fn capacities(&self) -> Vec<usize> {
        let default = self.default_capacity();
        self.reviewers
            .iter()
            .map(|r| self.config.capacities.get(&r.person_id).copied().unwrap_or(default))
            .collect()
    }

    /// Checks every cross-reference and invariant, naming the offending entity.
    pub fn validate(&self, taxonomy: Option<&Taxonomy>) -> Result<(), ValidationError> {
        let cfg = &self.config;
        if cfg.k == 0 {
            return Err(ValidationError::new("config", "k", "k must be at least 1"));
        }
        if cfg.rules.depth_threshold == 0 {
            return Err(ValidationError::new("config", "depth_threshold", "must be positive"));
        }
        if !cfg.rules.level_weights.is_valid() {
            return Err(ValidationError::new("config", "level_weights", "weights must lie in (0, 1]"));
        }
        if cfg.year_window <= 0 {
            return Err(ValidationError::new("config", "year_window", "must be positive"));
        }

        let mut people = HashSet::new();
        for p in &self.roster {
            if p.id.as_str().is_empty() {
                return Err(ValidationError::new("person", "", "empty id"));
            }
            if !people.insert(&p.id) {
                return Err(ValidationError::new("person", &p.id, "duplicate id"));
            }
            if p.email.matches('@').count() != 1 {
                return Err(ValidationError::new("person", &p.id, "email must contain exactly one '@'"));
            }
        }

        let mut papers = HashSet::new();
        for p in &self.papers {
            if !papers.insert(&p.id) {
                return Err(ValidationError::new("paper", &p.id, "duplicate id"));
            }
            if p.author_ids.is_empty() {
                return Err(ValidationError::new("paper", &p.id, "no authors"));
            }
            if let Some(a) = p.author_ids.iter().find(|a| !people.contains(a)) {
                return Err(ValidationError::new("paper", &p.id, format!("unknown author `{a}`")));
            }
            if p.keywords.is_empty() {
                return Err(ValidationError::new("paper", &p.id, "empty keyword set"));
            }
            if let Some(t) = taxonomy {
                p.keywords
                    .validate(t)
                    .map_err(|e| ValidationError::new("paper", &p.id, e.to_string()))?;
            }
        }

        let mut reviewers = HashSet::new();
        for r in &self.reviewers {
            if !reviewers.insert(&r.person_id) {
                return Err(ValidationError::new("reviewer", &r.person_id, "duplicate reviewer"));
            }
            if !people.contains(&r.person_id) {
                return Err(ValidationError::new("reviewer", &r.person_id, "not in roster"));
            }
            if let Some(t) = taxonomy {
                r.selection
                    .validate(t)
                    .map_err(|e| ValidationError::new("reviewer", &r.person_id, e.to_string()))?;
            }
        }
        for (r, &c) in &cfg.capacities {
            if !reviewers.contains(r) {
                return Err(ValidationError::new("capacity", r, "unknown reviewer"));
            }
            if c == 0 {
                return Err(ValidationError::new("capacity", r, "must be positive"));
            }
        }

        let mut bid_pairs = HashSet::new();
        for b in &self.bids {
            let key = format!("{}/{}", b.paper_id, b.reviewer_id);
            if !papers.contains(&b.paper_id) {
                return Err(ValidationError::new("bid", key, "unknown paper"));
            }
            if !reviewers.contains(&b.reviewer_id) {
                return Err(ValidationError::new("bid", key, "unknown reviewer"));
            }
            if !bid_pairs.insert((&b.paper_id, &b.reviewer_id)) {
                return Err(ValidationError::new("bid", key, "more than one bid for the pair"));
            }
        }
        for c in &self.explicit_cois {
            let key = format!("{}/{}", c.paper_id, c.reviewer_id);
            if !papers.contains(&c.paper_id) {
                return Err(ValidationError::new("explicit_coi", key, "unknown paper"));
            }
            if !reviewers.contains(&c.reviewer_id) {
                return Err(ValidationError::new("explicit_coi", key, "unknown reviewer"));
            }
        }
        Ok(())
    }
}
