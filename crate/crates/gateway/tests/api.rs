mod support;

use axum::http::StatusCode;
use paperassign_core::workflow::Workspace;
use paperassign_gateway::api::{router, AppState};
use paperassign_gateway::open_document;
use serde_json::json;
use support::{call, call_raw, clock, cli_ok, imported};

fn app_for(doc: &std::path::Path, persist: bool) -> axum::Router {
    let ws: Workspace = open_document(doc).unwrap().with_clock(clock());
    router(AppState::new(ws, persist.then(|| doc.to_path_buf())))
}

#[tokio::test]
async fn status_on_fresh_load_is_draft() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_for(&imported(dir.path()), false);
    let (code, v) = call(&app, "GET", "/api/status", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(v["stage"], "Draft");
    assert_eq!(v["papers"], 4);
    let (code, v) = call(&app, "GET", "/api/matrix", None).await;
    assert_eq!(code, StatusCode::CONFLICT);
    assert_eq!(v["error"], "IllegalState");
}

#[tokio::test]
async fn propose_then_approve_all() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_for(&imported(dir.path()), false);
    let (code, v) = call(&app, "POST", "/api/propose", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(v["stage"], "Proposed");
    assert_eq!(v["proposal"]["edges"].as_array().unwrap().len(), 8);

    let (code, v) = call(&app, "GET", "/api/matrix", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(v["papers"].as_array().unwrap().len(), 4);
    assert_eq!(v["reviewers"].as_array().unwrap().len(), 5);

    let (code, v) = call(&app, "POST", "/api/approve", Some(json!("all"))).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(v["stage"], "Approved");
    let (_, v) = call(&app, "GET", "/api/status", None).await;
    assert_eq!((v["stage"].clone(), v["pending"].clone()), (json!("Approved"), json!(0)));
}

#[tokio::test]
async fn partial_approval_and_edge_errors() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_for(&imported(dir.path()), false);
    let (_, v) = call(&app, "POST", "/api/propose", None).await;
    let id = v["proposal"]["edges"][0]["id"].as_u64().unwrap();
    let (code, v) = call(&app, "POST", "/api/approve", Some(json!({ "edge_ids": [id] }))).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(v["stage"], "PartiallyApproved");

    let (code, v) = call(&app, "POST", "/api/approve", Some(json!({ "edge_ids": [4242] }))).await;
    assert_eq!((code, v["error"].clone()), (StatusCode::NOT_FOUND, json!("UnknownEdge")));

    // conflict cell without force: rejected and nothing changes
    let (_, before) = call(&app, "GET", "/api/status", None).await;
    let (code, v) = call(&app, "POST", "/api/edges", Some(json!({ "paper_id": "P1", "reviewer_id": "r2" }))).await;
    assert_eq!(code, StatusCode::CONFLICT);
    assert_eq!(v["error"], "ConflictRequiresForce");
    let (_, after) = call(&app, "GET", "/api/status", None).await;
    assert_eq!(before, after);

    let (code, v) = call(
        &app,
        "POST",
        "/api/edges",
        Some(json!({ "paper_id": "P1", "reviewer_id": "r2", "force": true })),
    )
    .await;
    assert_eq!(code, StatusCode::OK, "{v}");
    assert_eq!(v["edge"]["origin"], "Manual");
    assert!(v["stage"].is_string());

    let (code, v) = call(&app, "POST", "/api/edges", Some(json!({ "paper_id": "P1", "reviewer_id": "r2", "force": true }))).await;
    assert_eq!((code, v["error"].clone()), (StatusCode::CONFLICT, json!("DuplicateEdge")));
    let (code, v) = call(&app, "POST", "/api/edges", Some(json!({ "paper_id": "P9", "reviewer_id": "r1" }))).await;
    assert_eq!((code, v["error"].clone()), (StatusCode::NOT_FOUND, json!("UnknownPaper")));
    let (code, v) = call(&app, "POST", "/api/edges", Some(json!({ "paper_id": "P1", "reviewer_id": "zz" }))).await;
    assert_eq!((code, v["error"].clone()), (StatusCode::NOT_FOUND, json!("UnknownReviewer")));

    let (code, v) = call(&app, "DELETE", "/api/edges/P1/r2", None).await;
    assert_eq!(code, StatusCode::OK);
    assert!(v["stage"].is_string());
    let (code, v) = call(&app, "DELETE", "/api/edges/P1/r2", None).await;
    assert_eq!((code, v["error"].clone()), (StatusCode::NOT_FOUND, json!("UnknownEdge")));
}

#[tokio::test]
async fn malformed_bodies_are_bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_for(&imported(dir.path()), false);
    for (uri, body) in [
        ("/api/approve", "{\"edge_ids\": \"some\"}"),
        ("/api/approve", "not json"),
        ("/api/edges", "{\"paper_id\": 3}"),
        ("/api/whatif", "[1, 2]"),
    ] {
        let (code, v) = call_raw(&app, "POST", uri, body).await;
        assert_eq!(code, StatusCode::BAD_REQUEST, "{uri} {body}");
        assert_eq!(v["error"], "BadRequest");
    }
    // approving before a proposal exists
    let (code, v) = call(&app, "POST", "/api/approve", Some(json!("all"))).await;
    assert_eq!((code, v["error"].clone()), (StatusCode::CONFLICT, json!("IllegalState")));
}

#[tokio::test]
async fn what_if_never_mutates() {
    let dir = tempfile::tempdir().unwrap();
    let doc = imported(dir.path());
    let app = app_for(&doc, true);
    let (_, v) = call(&app, "POST", "/api/propose", None).await;
    let best = v["proposal"]["edges"]
        .as_array()
        .unwrap()
        .iter()
        .max_by(|a, b| a["factor"].as_f64().partial_cmp(&b["factor"].as_f64()).unwrap())
        .unwrap()
        .clone();
    let saved = std::fs::read_to_string(&doc).unwrap();
    let (_, status) = call(&app, "GET", "/api/status", None).await;

    let (code, v) = call(&app, "POST", "/api/whatif", Some(json!({ "pinned": [], "forbidden": [] }))).await;
    assert_eq!(code, StatusCode::OK);
    assert!(v["added"].as_array().unwrap().is_empty() && v["removed"].as_array().unwrap().is_empty());

    let forbid = json!({ "paper_id": best["paper_id"], "reviewer_id": best["reviewer_id"] });
    let (code, v) = call(&app, "POST", "/api/whatif", Some(json!({ "forbidden": [forbid] }))).await;
    assert_eq!(code, StatusCode::OK);
    assert!(!v["added"].as_array().unwrap().is_empty());
    assert!(v["removed"].as_array().unwrap().contains(&forbid));

    assert_eq!(std::fs::read_to_string(&doc).unwrap(), saved);
    assert_eq!(call(&app, "GET", "/api/status", None).await.1, status);
}

#[tokio::test]
async fn restart_preserves_behavior() {
    let dir = tempfile::tempdir().unwrap();
    let doc = imported(dir.path());
    let app = app_for(&doc, true);
    call(&app, "POST", "/api/propose", None).await;
    let (_, status) = call(&app, "GET", "/api/status", None).await;
    let (_, proposal) = call(&app, "GET", "/api/proposal", None).await;
    let (_, coi) = call(&app, "GET", "/api/coi", None).await;

    let restarted = app_for(&doc, true);
    assert_eq!(call(&restarted, "GET", "/api/status", None).await.1, status);
    assert_eq!(call(&restarted, "GET", "/api/proposal", None).await.1, proposal);
    assert_eq!(call(&restarted, "GET", "/api/coi", None).await.1, coi);
    let (_, v) = call(&restarted, "POST", "/api/approve", Some(json!({ "edge_ids": "all" }))).await;
    assert_eq!(v["stage"], "Approved");
}

/// The same mutations through the CLI and through the API save byte-identical documents.
#[tokio::test]
async fn cli_and_api_documents_match() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let via_cli = imported(a.path());
    let via_api = imported(b.path());

    cli_ok(&via_cli, &["build-matrix"]);
    let prop: serde_json::Value = serde_json::from_str(&cli_ok(&via_cli, &["--format", "json", "propose"])).unwrap();
    let id = prop["edges"][1]["id"].as_u64().unwrap();
    cli_ok(&via_cli, &["approve", "--edge", &id.to_string()]);
    cli_ok(&via_cli, &["assign", "P1", "r2", "--force"]);
    cli_ok(&via_cli, &["unassign", "P1", "r2"]);
    cli_ok(&via_cli, &["what-if", "--forbid", "P4:r5"]);
    cli_ok(&via_cli, &["approve", "--all"]);

    let app = app_for(&via_api, true);
    assert_eq!(call(&app, "POST", "/api/propose", None).await.0, StatusCode::OK);
    assert_eq!(call(&app, "POST", "/api/approve", Some(json!({ "edge_ids": [id] }))).await.0, StatusCode::OK);
    let assign = json!({ "paper_id": "P1", "reviewer_id": "r2", "force": true });
    assert_eq!(call(&app, "POST", "/api/edges", Some(assign)).await.0, StatusCode::OK);
    assert_eq!(call(&app, "DELETE", "/api/edges/P1/r2", None).await.0, StatusCode::OK);
    let forbid = json!({ "forbidden": [{ "paper_id": "P4", "reviewer_id": "r5" }] });
    assert_eq!(call(&app, "POST", "/api/whatif", Some(forbid)).await.0, StatusCode::OK);
    assert_eq!(call(&app, "POST", "/api/approve", Some(json!("all"))).await.0, StatusCode::OK);

    let left = std::fs::read_to_string(&via_cli).unwrap();
    let right = std::fs::read_to_string(&via_api).unwrap();
    assert_eq!(left, right);
}
