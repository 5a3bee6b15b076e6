mod common;

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use common::fixture;
use paperassign_core::solver::Approval;
use paperassign_core::workflow::{replay, ApprovalTarget, Clock, EdgeKey};
use paperassign_core::{Conference, ConferenceDocument, Stage, Workspace};
use proptest::prelude::*;

/// A clock that moves by caller-chosen steps, including backwards.
#[derive(Default)]
struct SteppingClock(AtomicI64);

impl Clock for SteppingClock {
    fn now(&self) -> DateTime<Utc> {
        "2012-06-01T12:00:00Z".parse::<DateTime<Utc>>().unwrap() + Duration::seconds(self.0.load(Ordering::SeqCst))
    }
}

#[derive(Debug, Clone)]
enum Op {
    Pipeline,
    Detect,
    Propose,
    ApproveAll,
    ApproveSome(Vec<u64>),
    Assign(usize, usize, bool),
    Unassign(usize, usize),
    WhatIf(Vec<(usize, usize)>, Vec<(usize, usize)>),
    Reimport,
    BadTaxonomy,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        2 => Just(Op::Pipeline),
        1 => Just(Op::Detect),
        2 => Just(Op::Propose),
        1 => Just(Op::ApproveAll),
        2 => proptest::collection::vec(0u64..40, 0..4).prop_map(Op::ApproveSome),
        3 => (0usize..5, 0usize..6, any::<bool>()).prop_map(|(p, r, f)| Op::Assign(p, r, f)),
        2 => (0usize..5, 0usize..6).prop_map(|(p, r)| Op::Unassign(p, r)),
        1 => (proptest::collection::vec((0usize..5, 0usize..6), 0..2), proptest::collection::vec((0usize..5, 0usize..6), 0..3))
            .prop_map(|(a, b)| Op::WhatIf(a, b)),
        1 => Just(Op::Reimport),
        1 => Just(Op::BadTaxonomy),
    ]
}

// Index 4 / 5 name ids that do not exist.
fn paper(i: usize) -> String {
    format!("P{}", i + 1)
}

fn reviewer(j: usize) -> String {
    format!("r{}", j + 1)
}

fn start(clock: Arc<SteppingClock>) -> Workspace {
    let mut ws = Workspace::default().with_clock(clock);
    ws.import_taxonomy(fixture("taxonomy.xml").as_bytes(), None, "chair").unwrap();
    let conf: Conference = serde_json::from_str(&fixture("conference.json")).unwrap();
    ws.import_conference(conf, "chair").unwrap();
    ws.ingest_bibliography(fixture("dblp.xml").as_bytes(), "chair").unwrap();
    ws
}

fn apply(ws: &mut Workspace, op: &Op) -> Result<(), String> {
    let e = |e: paperassign_core::workflow::WorkflowError| e.name().to_string();
    match op {
        Op::Pipeline => ws.run_pipeline("chair").map(drop).map_err(e),
        Op::Detect => ws.detect_conflicts("chair").map(drop).map_err(e),
        Op::Propose => ws.propose("chair").map(drop).map_err(e),
        Op::ApproveAll => ws.approve(ApprovalTarget::All, "chair").map(drop).map_err(e),
        Op::ApproveSome(ids) => ws.approve(ApprovalTarget::Edges(ids.clone()), "chair").map(drop).map_err(e),
        Op::Assign(p, r, force) => ws
            .manual_assign(&paper(*p).into(), &reviewer(*r).into(), *force, "chair")
            .map(drop)
            .map_err(e),
        Op::Unassign(p, r) => ws.manual_unassign(&paper(*p).into(), &reviewer(*r).into(), "chair").map_err(e),
        Op::WhatIf(..) => unreachable!("read-only, handled by the caller"),
        Op::Reimport => {
            let conf: Conference = serde_json::from_str(&fixture("conference.json")).unwrap();
            ws.import_conference(conf, "chair").map_err(e)
        }
        Op::BadTaxonomy => ws.import_taxonomy(b"<taxonomy><node id=\"x\">", None, "chair").map_err(e),
    }
}

fn check_invariants(ws: &Workspace) -> Result<(), TestCaseError> {
    let status = ws.status();
    if ws.stage() == Stage::Approved {
        prop_assert_eq!(status.pending, 0);
        prop_assert!(status.edges > 0);
    }
    if ws.stage() >= Stage::Proposed {
        prop_assert!(ws.proposal().is_some());
    }
    if ws.stage() >= Stage::MatrixBuilt {
        prop_assert!(ws.matrix().is_some());
    }
    if let Some(p) = ws.proposal() {
        let approved = p.edges.iter().filter(|e| e.approval == Approval::Approved).count();
        let want = if !p.edges.is_empty() && approved == p.edges.len() {
            Stage::Approved
        } else if approved > 0 {
            Stage::PartiallyApproved
        } else {
            Stage::Proposed
        };
        prop_assert_eq!(ws.stage(), want);
    }
    prop_assert!(ws.unaudited_overrides().is_empty());
    let stamps: Vec<_> = ws.audit().iter().map(|a| a.timestamp).collect();
    prop_assert!(stamps.windows(2).all(|w| w[0] <= w[1]));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn workflow_is_sound(ops in proptest::collection::vec((op(), -30i64..60), 1..25)) {
        let clock = Arc::new(SteppingClock::default());
        let mut ws = start(clock.clone());
        let initial = ConferenceDocument::default();
        let mut prefix = ws.audit().to_vec();
        prop_assert_eq!(replay(&initial, &prefix).unwrap(), ws.document().clone());

        for (op, step) in &ops {
            clock.0.fetch_add(*step, Ordering::SeqCst);
            let before = ws.save();
            let before_len = ws.audit().len();
            if let Op::WhatIf(pin, forbid) = op {
                let keys = |v: &[(usize, usize)]| v.iter().map(|&(p, r)| EdgeKey::new(paper(p), reviewer(r))).collect::<Vec<_>>();
                let _ = ws.what_if(&keys(pin), &keys(forbid));
                prop_assert_eq!(ws.save(), before);
                continue;
            }
            match apply(&mut ws, op) {
                Ok(()) => prop_assert_eq!(ws.audit().len(), before_len + 1),
                Err(_) => {
                    prop_assert_eq!(ws.audit().len(), before_len);
                    prop_assert_eq!(ws.save(), before.clone());
                }
            }
            check_invariants(&ws)?;
            prefix = ws.audit().to_vec();
        }

        // the audit log alone rebuilds the final state
        prop_assert_eq!(replay(&initial, &prefix).unwrap().to_json(), ws.save());
        let loaded = Workspace::load(&ws.save()).unwrap();
        prop_assert_eq!(loaded.save(), ws.save());
        prop_assert_eq!(loaded.state_hash(), ws.state_hash());
    }
}

#[test]
fn illegal_transitions_are_rejected_without_change() {
    let clock = Arc::new(SteppingClock::default());
    let mut ws = start(clock);
    let before = ws.save();
    let err = ws.propose("chair").unwrap_err();
    assert_eq!(err.name(), "IllegalState");
    assert_eq!(ws.approve(ApprovalTarget::All, "chair").unwrap_err().name(), "IllegalState");
    assert_eq!(
        ws.manual_assign(&"P1".into(), &"r1".into(), false, "chair").unwrap_err().name(),
        "IllegalState"
    );
    assert_eq!(ws.save(), before);
}

#[test]
fn forced_conflict_override_is_audited() {
    let clock = Arc::new(SteppingClock::default());
    let mut ws = start(clock);
    ws.run_pipeline("chair").unwrap();
    ws.propose("chair").unwrap();
    let err = ws.manual_assign(&"P1".into(), &"r2".into(), false, "chair").unwrap_err();
    assert_eq!(err.name(), "ConflictRequiresForce");
    // r2 may be at capacity; force covers both checks
    ws.manual_assign(&"P1".into(), &"r2".into(), true, "chair").unwrap();
    let last = ws.audit().last().unwrap();
    assert!(last.summary.contains("force override of conflict"), "{}", last.summary);
    assert!(ws.unaudited_overrides().is_empty());
    assert!(ws.status().warnings.iter().any(|w| w.contains("P1/r2")));
}

#[test]
fn what_if_reports_the_difference() {
    let clock = Arc::new(SteppingClock::default());
    let mut ws = start(clock);
    ws.run_pipeline("chair").unwrap();
    ws.propose("chair").unwrap();
    let hash = ws.state_hash();
    let current = ws.proposal().unwrap().edges[0].clone();
    let forbid = EdgeKey::new(current.paper_id.clone(), current.reviewer_id.clone());
    let out = ws.what_if(&[], std::slice::from_ref(&forbid)).unwrap();
    assert!(out.removed.contains(&forbid));
    assert!(!out.proposal.contains(&forbid.paper_id, &forbid.reviewer_id));
    assert!(out.weight_delta <= 1e-9);
    assert_eq!(out.added.len(), out.removed.len());
    assert_eq!(ws.state_hash(), hash);

    let conflict = ws.what_if(&[EdgeKey::new("P1", "r2")], &[]).unwrap_err();
    assert_eq!(conflict.name(), "ConflictRequiresForce");
}
