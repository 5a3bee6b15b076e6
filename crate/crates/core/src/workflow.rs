//! Conference state, the build → detect → propose pipeline, chair approval
//! and manual edits, all recorded in an append-only audit log.
//!
//! Every mutation goes through [`Workspace::commit`]: the action is applied
//! to a copy of the state and only swapped in, together with its audit
//! event, when it succeeds. Audit actions carry everything needed to redo
//! them, so [`replay`] over the starting document reproduces the final one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bids::Bid;
use crate::coi::{self, BibCorpus, BibError, CoiReason, CoiRecord, DetectionOptions};
use crate::conference::{Conference, ValidationError};
use crate::ids::{PaperId, ReviewerId};
use crate::par::Exec;
use crate::similarity::{build_similarity_matrix, BuildError, MatrixInputs, Provenance, SimilarityMatrix};
use crate::solver::{
    score_proposal, solve, Approval, AssignmentProblem, AssignmentProposal, Origin,
    ProposalEdge, SolveError,
};
use crate::taxonomy::{Taxonomy, TaxonomyError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum Stage {
    #[default]
    Draft,
    MatrixBuilt,
    Proposed,
    PartiallyApproved,
    Approved,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The taxonomy is stored inline (canonical XML) so a document is self-contained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub xml: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApprovalTarget {
    All,
    Edges(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Action {
    ImportTaxonomy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
        xml: String,
    },
    ImportConference {
        conference: Conference,
    },
    IngestBibliography {
        corpus: BibCorpus,
    },
    DetectConflicts {
        current_year: i32,
    },
    RunPipeline {
        current_year: i32,
    },
    Propose,
    Approve {
        target: ApprovalTarget,
    },
    ManualAssign {
        paper_id: PaperId,
        reviewer_id: ReviewerId,
        force: bool,
    },
    ManualUnassign {
        paper_id: PaperId,
        reviewer_id: ReviewerId,
    },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::ImportTaxonomy { .. } => "import_taxonomy",
            Action::ImportConference { .. } => "import_conference",
            Action::IngestBibliography { .. } => "ingest_bibliography",
            Action::DetectConflicts { .. } => "detect_conflicts",
            Action::RunPipeline { .. } => "run_pipeline",
            Action::Propose => "propose",
            Action::Approve { .. } => "approve",
            Action::ManualAssign { .. } => "manual_assign",
            Action::ManualUnassign { .. } => "manual_unassign",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub timestamp: DateTime<Utc>,
    pub actor: String,
    pub action: Action,
    pub summary: String,
}

/// The persisted state of one conference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConferenceDocument {
    pub version: u32,
    #[serde(flatten)]
    pub conference: Conference,
    #[serde(default)]
    pub taxonomy_ref: Option<TaxonomyRef>,
    #[serde(default)]
    pub matrix: Option<SimilarityMatrix>,
    #[serde(default)]
    pub proposal: Option<AssignmentProposal>,
    #[serde(default)]
    pub audit: Vec<AuditEvent>,
    #[serde(default)]
    pub stage: Stage,
    #[serde(default)]
    pub conflicts: Vec<CoiRecord>,
    #[serde(default)]
    pub bibliography: Option<BibCorpus>,
    #[serde(default)]
    pub next_edge_id: u64,
}

impl Default for ConferenceDocument {
    fn default() -> Self {
        ConferenceDocument {
            version: SCHEMA_VERSION,
            conference: Conference::default(),
            taxonomy_ref: None,
            matrix: None,
            proposal: None,
            audit: Vec::new(),
            stage: Stage::Draft,
            conflicts: Vec::new(),
            bibliography: None,
            next_edge_id: 0,
        }
    }
}

impl ConferenceDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, WorkflowError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| WorkflowError::MalformedDocument(e.to_string()))?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(WorkflowError::SchemaVersionMismatch {
                    found: v.to_string(),
                    expected: SCHEMA_VERSION,
                })
            }
            None => {
                let found = value.get("version").map_or("missing".to_string(), |v| v.to_string());
                return Err(WorkflowError::SchemaVersionMismatch {
                    found,
                    expected: SCHEMA_VERSION,
                });
            }
        }
        serde_json::from_value(value).map_err(|e| WorkflowError::MalformedDocument(e.to_string()))
    }

    /// SHA-256 over the canonical serialization.
    pub fn state_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// One JSON audit record per line.
    pub fn audit_jsonl(&self) -> String {
        self.audit
            .iter()
            .map(|e| serde_json::to_string(e).expect("audit event serializes") + "\n")
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkflowError {
    #[error("`{op}` is not allowed in stage {stage}")]
    IllegalState { op: &'static str, stage: Stage },
    #[error("no edge {0}")]
    UnknownEdge(String),
    #[error("unknown paper `{0}`")]
    UnknownPaper(PaperId),
    #[error("unknown reviewer `{0}`")]
    UnknownReviewer(ReviewerId),
    #[error("{0}/{1} is already assigned")]
    DuplicateEdge(PaperId, ReviewerId),
    #[error("{paper}/{reviewer} is a conflict of interest ({reasons}); pass force to override")]
    ConflictRequiresForce {
        paper: PaperId,
        reviewer: ReviewerId,
        reasons: String,
    },
    #[error("reviewer `{reviewer}` is at capacity {capacity}; pass force to override")]
    CapacityRequiresForce { reviewer: ReviewerId, capacity: usize },
    #[error("no taxonomy has been imported")]
    MissingTaxonomy,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Bibliography(#[from] BibError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("document version {found} does not match supported version {expected}")]
    SchemaVersionMismatch { found: String, expected: u32 },
    #[error("malformed document: {0}")]
    MalformedDocument(String),
}

impl WorkflowError {
    pub fn name(&self) -> &'static str {
        match self {
            WorkflowError::IllegalState { .. } => "IllegalState",
            WorkflowError::UnknownEdge(_) => "UnknownEdge",
            WorkflowError::UnknownPaper(_) => "UnknownPaper",
            WorkflowError::UnknownReviewer(_) => "UnknownReviewer",
            WorkflowError::DuplicateEdge(..) => "DuplicateEdge",
            WorkflowError::ConflictRequiresForce { .. } => "ConflictRequiresForce",
            WorkflowError::CapacityRequiresForce { .. } => "CapacityRequiresForce",
            WorkflowError::MissingTaxonomy => "MissingTaxonomy",
            WorkflowError::InvalidRequest(_) => "InvalidRequest",
            WorkflowError::Validation(_) => "ValidationError",
            WorkflowError::Taxonomy(e) => e.name(),
            WorkflowError::Bibliography(e) => e.name(),
            WorkflowError::Build(e) => e.name(),
            WorkflowError::Solve(e) => e.name(),
            WorkflowError::SchemaVersionMismatch { .. } => "SchemaVersionMismatch",
            WorkflowError::MalformedDocument(_) => "MalformedDocument",
        }
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always reports the same instant.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

/// A (paper, reviewer) pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub paper_id: PaperId,
    pub reviewer_id: ReviewerId,
}

impl EdgeKey {
    pub fn new(paper_id: impl Into<PaperId>, reviewer_id: impl Into<ReviewerId>) -> Self {
        EdgeKey {
            paper_id: paper_id.into(),
            reviewer_id: reviewer_id.into(),
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.paper_id, self.reviewer_id)
    }
}

/// Result of a what-if run, compared against the stored proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfOutcome {
    pub proposal: AssignmentProposal,
    pub added: Vec<EdgeKey>,
    pub removed: Vec<EdgeKey>,
    pub kept: Vec<EdgeKey>,
    pub total_weight: f64,
    pub baseline_weight: f64,
    pub weight_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusReport {
    pub stage: Stage,
    pub papers: usize,
    pub reviewers: usize,
    pub conflicts: usize,
    pub edges: usize,
    pub approved: usize,
    pub pending: usize,
    pub audit_len: usize,
    pub warnings: Vec<String>,
}

/// A conference document plus its parsed taxonomy and a clock for audit stamps.
#[derive(Clone)]
pub struct Workspace {
    doc: ConferenceDocument,
    taxonomy: Option<Taxonomy>,
    clock: Arc<dyn Clock>,
    exec: Exec,
}

impl fmt::Debug for Workspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Workspace")
            .field("doc", &self.doc)
            .field("exec", &self.exec)
            .finish_non_exhaustive()
    }
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace::new(ConferenceDocument::default()).expect("empty document is valid")
    }
}

impl Workspace {
    pub fn new(doc: ConferenceDocument) -> Result<Self, WorkflowError> {
        if doc.version != SCHEMA_VERSION {
            return Err(WorkflowError::SchemaVersionMismatch {
                found: doc.version.to_string(),
                expected: SCHEMA_VERSION,
            });
        }
        let taxonomy = match &doc.taxonomy_ref {
            Some(r) => Some(
                Taxonomy::from_xml(r.xml.as_bytes())
                    .map_err(|e| WorkflowError::MalformedDocument(format!("taxonomy: {e}")))?,
            ),
            None => None,
        };
        Ok(Workspace {
            doc,
            taxonomy,
            clock: Arc::new(SystemClock),
            exec: Exec::default(),
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn load(text: &str) -> Result<Self, WorkflowError> {
        Workspace::new(ConferenceDocument::from_json(text)?)
    }

    pub fn save(&self) -> String {
        self.doc.to_json()
    }

    pub fn document(&self) -> &ConferenceDocument {
        &self.doc
    }

    pub fn into_document(self) -> ConferenceDocument {
        self.doc
    }

    pub fn conference(&self) -> &Conference {
        &self.doc.conference
    }

    pub fn taxonomy(&self) -> Option<&Taxonomy> {
        self.taxonomy.as_ref()
    }

    pub fn stage(&self) -> Stage {
        self.doc.stage
    }

    pub fn matrix(&self) -> Option<&SimilarityMatrix> {
        self.doc.matrix.as_ref()
    }

    pub fn proposal(&self) -> Option<&AssignmentProposal> {
        self.doc.proposal.as_ref()
    }

    pub fn conflicts(&self) -> &[CoiRecord] {
        &self.doc.conflicts
    }

    pub fn audit(&self) -> &[AuditEvent] {
        &self.doc.audit
    }

    pub fn state_hash(&self) -> String {
        self.doc.state_hash()
    }

    fn current_year(&self) -> i32 {
        self.doc
            .conference
            .config
            .current_year
            .unwrap_or_else(|| self.clock.now().year())
    }

    // ---- mutating operations ----

    pub fn import_taxonomy(&mut self, xml: &[u8], path: Option<String>, actor: &str) -> Result<(), WorkflowError> {
        let t = Taxonomy::from_xml(xml)?;
        self.commit(actor, Action::ImportTaxonomy { path, xml: t.to_xml() })
    }

    pub fn import_conference(&mut self, conference: Conference, actor: &str) -> Result<(), WorkflowError> {
        self.commit(actor, Action::ImportConference { conference })
    }

    /// Parses a bibliography dump and keeps only records that could link two
    /// people on the roster.
    pub fn ingest_bibliography(&mut self, xml: &[u8], actor: &str) -> Result<(), WorkflowError> {
        let mut corpus = coi::ingest_bibliography(xml)?;
        let keys: Vec<_> = self
            .doc
            .conference
            .roster
            .iter()
            .filter_map(|p| coi::NameKey::of(&p.name))
            .collect();
        corpus.retain_relevant(&keys);
        self.commit(actor, Action::IngestBibliography { corpus })
    }

    pub fn detect_conflicts(&mut self, actor: &str) -> Result<&[CoiRecord], WorkflowError> {
        let current_year = self.current_year();
        self.commit(actor, Action::DetectConflicts { current_year })?;
        Ok(&self.doc.conflicts)
    }

    pub fn run_pipeline(&mut self, actor: &str) -> Result<&SimilarityMatrix, WorkflowError> {
        let current_year = self.current_year();
        self.commit(actor, Action::RunPipeline { current_year })?;
        Ok(self.doc.matrix.as_ref().expect("pipeline stores a matrix"))
    }

    pub fn propose(&mut self, actor: &str) -> Result<&AssignmentProposal, WorkflowError> {
        self.commit(actor, Action::Propose)?;
        Ok(self.doc.proposal.as_ref().expect("propose stores a proposal"))
    }

    pub fn approve(&mut self, target: ApprovalTarget, actor: &str) -> Result<Stage, WorkflowError> {
        self.commit(actor, Action::Approve { target })?;
        Ok(self.doc.stage)
    }

    pub fn manual_assign(
        &mut self,
        paper_id: &PaperId,
        reviewer_id: &ReviewerId,
        force: bool,
        actor: &str,
    ) -> Result<&ProposalEdge, WorkflowError> {
        self.commit(
            actor,
            Action::ManualAssign {
                paper_id: paper_id.clone(),
                reviewer_id: reviewer_id.clone(),
                force,
            },
        )?;
        Ok(self
            .doc
            .proposal
            .as_ref()
            .and_then(|p| p.find(paper_id, reviewer_id))
            .expect("assigned edge is stored"))
    }

    pub fn manual_unassign(&mut self, paper_id: &PaperId, reviewer_id: &ReviewerId, actor: &str) -> Result<(), WorkflowError> {
        self.commit(
            actor,
            Action::ManualUnassign {
                paper_id: paper_id.clone(),
                reviewer_id: reviewer_id.clone(),
            },
        )
    }

    /// Applies `action`, appending its audit event. The state is untouched on error.
    pub fn commit(&mut self, actor: &str, action: Action) -> Result<(), WorkflowError> {
        let last = self.doc.audit.last().map(|e| e.timestamp);
        let now = self.clock.now();
        let timestamp = last.map_or(now, |l| l.max(now));
        self.commit_at(actor, action, timestamp)
    }

    fn commit_at(&mut self, actor: &str, action: Action, timestamp: DateTime<Utc>) -> Result<(), WorkflowError> {
        let mut next = self.clone();
        let summary = next.apply(&action)?;
        next.doc.audit.push(AuditEvent {
            timestamp,
            actor: actor.to_string(),
            action,
            summary,
        });
        *self = next;
        Ok(())
    }

    fn require(&self, op: &'static str, ok: impl Fn(Stage) -> bool) -> Result<(), WorkflowError> {
        if ok(self.doc.stage) {
            Ok(())
        } else {
            Err(WorkflowError::IllegalState {
                op,
                stage: self.doc.stage,
            })
        }
    }

    /// Inputs changed: drop everything derived from them.
    fn reset_derived(&mut self) {
        self.doc.matrix = None;
        self.doc.proposal = None;
        self.doc.conflicts.clear();
        self.doc.stage = Stage::Draft;
    }

    fn apply(&mut self, action: &Action) -> Result<String, WorkflowError> {
        match action {
            Action::ImportTaxonomy { path, xml } => {
                let t = Taxonomy::from_xml(xml.as_bytes())?;
                let summary = format!("imported taxonomy with {} keywords", t.len());
                self.taxonomy = Some(t);
                self.doc.taxonomy_ref = Some(TaxonomyRef {
                    path: path.clone(),
                    xml: xml.clone(),
                });
                self.reset_derived();
                Ok(summary)
            }
            Action::ImportConference { conference } => {
                conference.validate(self.taxonomy.as_ref())?;
                self.doc.conference = conference.clone();
                self.reset_derived();
                Ok(format!(
                    "imported {} papers, {} reviewers, {} bids, {} declared conflicts",
                    conference.papers.len(),
                    conference.reviewers.len(),
                    conference.bids.len(),
                    conference.explicit_cois.len()
                ))
            }
            Action::IngestBibliography { corpus } => {
                let summary = format!(
                    "ingested {} bibliography records ({} skipped)",
                    corpus.len(),
                    corpus.skipped()
                );
                self.doc.bibliography = Some(corpus.clone());
                self.reset_derived();
                Ok(summary)
            }
            Action::DetectConflicts { current_year } => {
                self.doc.conference.validate(self.taxonomy.as_ref())?;
                let records = self.detect(*current_year);
                let summary = format!("detected {} conflict records", records.len());
                // A stored matrix built from different conflicts is stale.
                if self.doc.matrix.is_some() && records != self.doc.conflicts {
                    self.reset_derived();
                }
                self.doc.conflicts = records;
                Ok(summary)
            }
            Action::RunPipeline { current_year } => {
                let t = self.taxonomy.as_ref().ok_or(WorkflowError::MissingTaxonomy)?;
                let conf = &self.doc.conference;
                conf.validate(Some(t))?;
                let records = self.detect(*current_year);
                let matrix = build_matrix(t, conf, &records, self.exec)?;
                let n_conflicts = matrix.cells().iter().filter(|c| c.provenance == Provenance::Conflict).count();
                let summary = format!(
                    "built {}x{} matrix with {} conflict cells",
                    matrix.rows(),
                    matrix.cols(),
                    n_conflicts
                );
                self.doc.conflicts = records;
                self.doc.matrix = Some(matrix);
                self.doc.proposal = None;
                self.doc.stage = Stage::MatrixBuilt;
                Ok(summary)
            }
            Action::Propose => {
                self.require("propose", |s| s >= Stage::MatrixBuilt)?;
                let mut proposal = solve(&self.problem()?, self.doc.conference.config.solver)?;
                for e in &mut proposal.edges {
                    e.id = self.doc.next_edge_id;
                    self.doc.next_edge_id += 1;
                }
                let summary = format!("proposed {} edges", proposal.len());
                self.doc.proposal = Some(proposal);
                self.doc.stage = Stage::Proposed;
                Ok(summary)
            }
            Action::Approve { target } => {
                self.require("approve", |s| matches!(s, Stage::Proposed | Stage::PartiallyApproved))?;
                let proposal = self.doc.proposal.as_mut().expect("proposal exists past Proposed");
                let count = match target {
                    ApprovalTarget::All => {
                        for e in &mut proposal.edges {
                            e.approval = Approval::Approved;
                        }
                        proposal.edges.len()
                    }
                    ApprovalTarget::Edges(ids) => {
                        if let Some(id) = ids.iter().find(|id| !proposal.edges.iter().any(|e| e.id == **id)) {
                            return Err(WorkflowError::UnknownEdge(id.to_string()));
                        }
                        let ids: BTreeSet<u64> = ids.iter().copied().collect();
                        for e in proposal.edges.iter_mut().filter(|e| ids.contains(&e.id)) {
                            e.approval = Approval::Approved;
                        }
                        ids.len()
                    }
                };
                self.refresh_stage();
                Ok(format!("approved {count} edges; stage {}", self.doc.stage))
            }
            Action::ManualAssign {
                paper_id,
                reviewer_id,
                force,
            } => self.apply_manual_assign(paper_id, reviewer_id, *force),
            Action::ManualUnassign { paper_id, reviewer_id } => {
                self.require("manual_unassign", |s| s >= Stage::Proposed)?;
                let proposal = self.doc.proposal.as_mut().expect("proposal exists past Proposed");
                let pos = proposal
                    .edges
                    .iter()
                    .position(|e| &e.paper_id == paper_id && &e.reviewer_id == reviewer_id)
                    .ok_or_else(|| WorkflowError::UnknownEdge(format!("{paper_id}/{reviewer_id}")))?;
                let edge = proposal.edges.remove(pos);
                self.refresh_stage();
                Ok(format!("removed edge {} ({paper_id}/{reviewer_id})", edge.id))
            }
        }
    }

    fn apply_manual_assign(&mut self, paper: &PaperId, reviewer: &ReviewerId, force: bool) -> Result<String, WorkflowError> {
        self.require("manual_assign", |s| s >= Stage::Proposed)?;
        let matrix = self.doc.matrix.as_ref().expect("matrix exists past MatrixBuilt");
        let p = matrix
            .paper_index(paper)
            .map_err(|_| WorkflowError::UnknownPaper(paper.clone()))?;
        let r = matrix
            .reviewer_index(reviewer)
            .map_err(|_| WorkflowError::UnknownReviewer(reviewer.clone()))?;
        let cell = matrix.cell(p, r);
        let proposal = self.doc.proposal.as_ref().expect("proposal exists past Proposed");
        if proposal.contains(paper, reviewer) {
            return Err(WorkflowError::DuplicateEdge(paper.clone(), reviewer.clone()));
        }
        let mut notes = Vec::new();
        if cell.provenance == Provenance::Conflict {
            let reasons = self.conflict_reasons(paper, reviewer).join(", ");
            if !force {
                return Err(WorkflowError::ConflictRequiresForce {
                    paper: paper.clone(),
                    reviewer: reviewer.clone(),
                    reasons,
                });
            }
            notes.push(format!("force override of conflict ({reasons})"));
        }
        let capacity = self.doc.conference.capacities()[r];
        let load = proposal.edges.iter().filter(|e| &e.reviewer_id == reviewer).count();
        if load >= capacity {
            if !force {
                return Err(WorkflowError::CapacityRequiresForce {
                    reviewer: reviewer.clone(),
                    capacity,
                });
            }
            notes.push(format!("force override of capacity {capacity}"));
        }
        let id = self.doc.next_edge_id;
        self.doc.next_edge_id += 1;
        let proposal = self.doc.proposal.as_mut().expect("proposal exists past Proposed");
        proposal.edges.push(ProposalEdge {
            id,
            paper_id: paper.clone(),
            reviewer_id: reviewer.clone(),
            factor: cell.factor,
            pass: 0,
            approval: Approval::Approved,
            origin: Origin::Manual,
        });
        self.refresh_stage();
        let mut summary = format!("assigned {reviewer} to {paper} as edge {id}");
        for n in notes {
            summary.push_str("; ");
            summary.push_str(&n);
        }
        Ok(summary)
    }

    /// After a proposal exists the stage follows from edge approvals.
    fn refresh_stage(&mut self) {
        let edges = self.doc.proposal.as_ref().map_or(&[][..], |p| &p.edges[..]);
        let approved = edges.iter().filter(|e| e.approval == Approval::Approved).count();
        self.doc.stage = if !edges.is_empty() && approved == edges.len() {
            Stage::Approved
        } else if approved > 0 {
            Stage::PartiallyApproved
        } else {
            Stage::Proposed
        };
    }

    fn detect(&self, current_year: i32) -> Vec<CoiRecord> {
        let cfg = &self.doc.conference.config;
        coi::detect_all(
            &self.doc.conference,
            self.doc.bibliography.as_ref(),
            DetectionOptions {
                same_country: cfg.same_country_rule,
                year_window: cfg.year_window,
                current_year,
            },
            self.exec,
        )
    }

    fn conflict_reasons(&self, paper: &PaperId, reviewer: &ReviewerId) -> Vec<String> {
        let mut reasons: Vec<String> = self
            .doc
            .conflicts
            .iter()
            .filter(|c| &c.paper_id == paper && &c.reviewer_id == reviewer)
            .map(|c| format!("{}: {}", c.reason, c.evidence))
            .collect();
        if reasons.is_empty() {
            reasons.push(CoiReason::Explicit.to_string());
        }
        reasons
    }

    /// The solver input for the stored matrix and configured capacities.
    pub fn problem(&self) -> Result<AssignmentProblem, WorkflowError> {
        let matrix = self.doc.matrix.clone().ok_or(WorkflowError::IllegalState {
            op: "solve",
            stage: self.doc.stage,
        })?;
        let conf = &self.doc.conference;
        Ok(AssignmentProblem::new(matrix, conf.config.k).with_capacities(conf.capacities()))
    }

    // ---- read-only operations ----

    /// Re-solves with `pinned` pairs fixed and `forbidden` pairs excluded,
    /// leaving the stored state alone.
    pub fn what_if(&self, pinned: &[EdgeKey], forbidden: &[EdgeKey]) -> Result<WhatIfOutcome, WorkflowError> {
        self.require("what_if", |s| s >= Stage::MatrixBuilt)?;
        let mut problem = self.problem()?;
        let index = |m: &SimilarityMatrix, p: &PaperId, r: &ReviewerId| -> Result<(), WorkflowError> {
            m.paper_index(p).map_err(|_| WorkflowError::UnknownPaper(p.clone()))?;
            m.reviewer_index(r).map_err(|_| WorkflowError::UnknownReviewer(r.clone()))?;
            Ok(())
        };
        for e in pinned {
            index(&problem.matrix, &e.paper_id, &e.reviewer_id)?;
            problem.pin(&e.paper_id, &e.reviewer_id).expect("ids checked");
        }
        for e in forbidden {
            index(&problem.matrix, &e.paper_id, &e.reviewer_id)?;
            if pinned.contains(e) {
                return Err(WorkflowError::InvalidRequest(format!("{e} is both pinned and forbidden")));
            }
            problem.exclude(&e.paper_id, &e.reviewer_id).expect("ids checked");
        }
        let proposal = solve(&problem, self.doc.conference.config.solver)?;
        let total_weight = score_proposal(&proposal, &problem.matrix)
            .map_err(SolveError::from)?
            .total_weight;
        let keys = |p: &AssignmentProposal| -> BTreeSet<EdgeKey> {
            p.edges
                .iter()
                .map(|e| EdgeKey::new(e.paper_id.clone(), e.reviewer_id.clone()))
                .collect()
        };
        let (baseline, baseline_weight) = match &self.doc.proposal {
            Some(current) => (keys(current), current.edges.iter().map(|e| e.factor).sum()),
            None => (BTreeSet::new(), 0.0),
        };
        let result = keys(&proposal);
        Ok(WhatIfOutcome {
            added: result.difference(&baseline).cloned().collect(),
            removed: baseline.difference(&result).cloned().collect(),
            kept: result.intersection(&baseline).cloned().collect(),
            proposal,
            total_weight,
            baseline_weight,
            weight_delta: total_weight - baseline_weight,
        })
    }

    pub fn status(&self) -> StatusReport {
        let conf = &self.doc.conference;
        let edges = self.doc.proposal.as_ref().map_or(&[][..], |p| &p.edges[..]);
        let mut warnings = Vec::new();
        if self.doc.proposal.is_some() {
            let mut per_paper: BTreeMap<&PaperId, usize> = conf.papers.iter().map(|p| (&p.id, 0)).collect();
            let mut load: BTreeMap<&ReviewerId, usize> = BTreeMap::new();
            for e in edges {
                *per_paper.entry(&e.paper_id).or_default() += 1;
                *load.entry(&e.reviewer_id).or_default() += 1;
            }
            for (p, n) in per_paper {
                if n < conf.config.k {
                    warnings.push(format!("paper {p} has {n} of {} reviewers", conf.config.k));
                }
            }
            for (r, cap) in conf.reviewers.iter().zip(conf.capacities()) {
                let n = load.get(&r.person_id).copied().unwrap_or(0);
                if n > cap {
                    warnings.push(format!("reviewer {} has {n} papers, capacity {cap}", r.person_id));
                }
            }
            for e in edges {
                if self.doc.conflicts.iter().any(|c| c.paper_id == e.paper_id && c.reviewer_id == e.reviewer_id) {
                    warnings.push(format!("edge {}/{} overrides a conflict of interest", e.paper_id, e.reviewer_id));
                }
            }
        }
        StatusReport {
            stage: self.doc.stage,
            papers: conf.papers.len(),
            reviewers: conf.reviewers.len(),
            conflicts: self.doc.conflicts.len(),
            edges: edges.len(),
            approved: edges.iter().filter(|e| e.approval == Approval::Approved).count(),
            pending: edges.iter().filter(|e| e.approval == Approval::Pending).count(),
            audit_len: self.doc.audit.len(),
            warnings,
        }
    }

    /// Manual edges sitting on Conflict cells that lack a forced audit event.
    pub fn unaudited_overrides(&self) -> Vec<(PaperId, ReviewerId)> {
        let (Some(m), Some(prop)) = (&self.doc.matrix, &self.doc.proposal) else {
            return Vec::new();
        };
        prop.edges
            .iter()
            .filter(|e| e.origin == Origin::Manual)
            .filter(|e| m.get(&e.paper_id, &e.reviewer_id).is_ok_and(|c| c.provenance == Provenance::Conflict))
            .filter(|e| {
                !self.doc.audit.iter().any(|a| {
                    matches!(&a.action, Action::ManualAssign { paper_id, reviewer_id, force: true }
                        if paper_id == &e.paper_id && reviewer_id == &e.reviewer_id)
                })
            })
            .map(|e| (e.paper_id.clone(), e.reviewer_id.clone()))
            .collect()
    }
}

/// Re-applies `events` on top of `initial`, using each event's own timestamp and actor.
pub fn replay(initial: &ConferenceDocument, events: &[AuditEvent]) -> Result<ConferenceDocument, WorkflowError> {
    let mut ws = Workspace::new(initial.clone())?;
    for e in events {
        ws.commit_at(&e.actor, e.action.clone(), e.timestamp)?;
    }
    Ok(ws.doc)
}

fn build_matrix(
    t: &Taxonomy,
    conf: &Conference,
    conflicts: &[CoiRecord],
    exec: Exec,
) -> Result<SimilarityMatrix, BuildError> {
    let inputs = MatrixInputs {
        papers: conf.papers.iter().map(|p| (&p.id, &p.keywords)).collect(),
        reviewers: conf.reviewers.iter().map(|r| (&r.person_id, &r.selection)).collect(),
        bids: conf
            .bids
            .iter()
            .map(|b| (&b.paper_id, &b.reviewer_id, b.level))
            .collect::<Vec<(_, _, Bid)>>(),
        bid_mode: conf.config.bid_mode,
        conflicts: conflicts.iter().map(|c| (&c.paper_id, &c.reviewer_id)).collect(),
        rules: &conf.config.rules,
    };
    build_similarity_matrix(t, &inputs, exec)
}
