//! Assignment CSV: one row per proposal edge.

use paperassign_core::similarity::Provenance;
use paperassign_core::workflow::{WorkflowError, Workspace};
use serde::Serialize;

pub const CSV_COLUMNS: [&str; 7] = [
    "paper_id",
    "reviewer_id",
    "factor",
    "provenance",
    "pass",
    "origin",
    "approval",
];

#[derive(Serialize)]
struct Row<'a> {
    paper_id: &'a str,
    reviewer_id: &'a str,
    factor: f64,
    provenance: String,
    pass: u32,
    origin: String,
    approval: String,
}

pub fn export_csv(ws: &Workspace) -> Result<String, WorkflowError> {
    let proposal = ws.proposal().ok_or(WorkflowError::IllegalState {
        op: "export",
        stage: ws.stage(),
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    if proposal.edges.is_empty() {
        w.write_record(CSV_COLUMNS).expect("in-memory write");
    }
    for e in &proposal.edges {
        let provenance = ws
            .matrix()
            .and_then(|m| m.get(&e.paper_id, &e.reviewer_id).ok())
            .map_or(Provenance::Computed, |c| c.provenance);
        w.serialize(Row {
            paper_id: e.paper_id.as_str(),
            reviewer_id: e.reviewer_id.as_str(),
            factor: e.factor,
            provenance: format!("{provenance:?}"),
            pass: e.pass,
            origin: e.origin.to_string(),
            approval: e.approval.to_string(),
        })
        .expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8"))
}
