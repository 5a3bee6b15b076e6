//! Response payloads shared by the CLI (`--format json`) and the HTTP API.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use paperassign_core::coi::{conflicts_by_pair, CoiReason, CoiRecord};
use paperassign_core::similarity::Provenance;
use paperassign_core::solver::ProposalEdge;
use paperassign_core::workflow::{StatusReport, Workspace};
use paperassign_core::{PaperId, ReviewerId, Stage};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageView {
    pub stage: Stage,
}

impl StageView {
    pub fn of(ws: &Workspace) -> Self {
        StageView { stage: ws.stage() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperHeader {
    pub id: PaperId,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerHeader {
    pub id: ReviewerId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellView {
    pub factor: f64,
    pub provenance: Provenance,
    pub conflict_reasons: Vec<CoiReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixView {
    pub stage: Stage,
    pub papers: Vec<PaperHeader>,
    pub reviewers: Vec<ReviewerHeader>,
    pub cells: Vec<Vec<CellView>>,
}

impl MatrixView {
    /// `None` until a matrix has been built.
    pub fn of(ws: &Workspace) -> Option<Self> {
        let m = ws.matrix()?;
        let conf = ws.conference();
        let reasons = conflicts_by_pair(ws.conflicts());
        let papers = m
            .papers()
            .iter()
            .map(|id| PaperHeader {
                id: id.clone(),
                title: conf
                    .papers
                    .iter()
                    .find(|p| &p.id == id)
                    .map(|p| p.title.clone())
                    .unwrap_or_default(),
            })
            .collect();
        let reviewers = m
            .reviewers()
            .iter()
            .map(|id| ReviewerHeader {
                id: id.clone(),
                name: conf.person(id).map(|p| p.name.clone()).unwrap_or_default(),
            })
            .collect();
        let cells = (0..m.rows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .enumerate()
                    .map(|(j, c)| CellView {
                        factor: c.factor,
                        provenance: c.provenance,
                        conflict_reasons: reasons
                            .get(&(&m.papers()[i], &m.reviewers()[j]))
                            .cloned()
                            .unwrap_or_default(),
                    })
                    .collect()
            })
            .collect();
        Some(MatrixView {
            stage: ws.stage(),
            papers,
            reviewers,
            cells,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeView {
    #[serde(flatten)]
    pub edge: ProposalEdge,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalView {
    pub stage: Stage,
    pub edges: Vec<EdgeView>,
    pub load: BTreeMap<ReviewerId, usize>,
    pub capacity: BTreeMap<ReviewerId, usize>,
    pub total_weight: f64,
}

impl ProposalView {
    pub fn of(ws: &Workspace) -> Self {
        let conf = ws.conference();
        let edges: Vec<EdgeView> = ws
            .proposal()
            .map(|p| p.edges.as_slice())
            .unwrap_or_default()
            .iter()
            .map(|e| EdgeView {
                edge: e.clone(),
                provenance: ws
                    .matrix()
                    .and_then(|m| m.get(&e.paper_id, &e.reviewer_id).ok())
                    .map_or(Provenance::Computed, |c| c.provenance),
            })
            .collect();
        let mut load: BTreeMap<ReviewerId, usize> =
            conf.reviewers.iter().map(|r| (r.person_id.clone(), 0)).collect();
        for e in &edges {
            *load.entry(e.edge.reviewer_id.clone()).or_default() += 1;
        }
        let capacity = conf
            .reviewers
            .iter()
            .map(|r| r.person_id.clone())
            .zip(conf.capacities())
            .collect();
        ProposalView {
            stage: ws.stage(),
            total_weight: edges.iter().map(|e| e.edge.factor).sum(),
            edges,
            load,
            capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoiView {
    pub conflicts: Vec<CoiRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub timestamp: DateTime<Utc>,
    pub actor: String,
    pub op: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusView {
    #[serde(flatten)]
    pub report: StatusReport,
    pub audit: Vec<AuditEntry>,
}

impl StatusView {
    pub fn of(ws: &Workspace) -> Self {
        StatusView {
            report: ws.status(),
            audit: ws
                .audit()
                .iter()
                .map(|e| AuditEntry {
                    timestamp: e.timestamp,
                    actor: e.actor.clone(),
                    op: e.action.name().to_string(),
                    summary: e.summary.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeResponse {
    pub stage: Stage,
    pub edge: ProposalEdge,
}
