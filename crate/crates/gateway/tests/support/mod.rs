//! Helpers shared by the gateway integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use clap::Parser;
use http_body_util::BodyExt;
use paperassign_core::workflow::{Clock, FixedClock};
use paperassign_gateway::cli::{run, Cli, CommandResult};
use serde_json::Value;
use tower::ServiceExt;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn clock() -> Arc<dyn Clock> {
    Arc::new(FixedClock("2012-06-01T12:00:00Z".parse().unwrap()))
}

/// Runs `paperassign --conference <doc> <args..>` in-process.
pub fn cli(doc: &Path, args: &[&str]) -> CommandResult {
    let mut argv = vec!["paperassign".to_string(), "--conference".into(), doc.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    run(Cli::try_parse_from(argv).expect("valid arguments"), clock())
}

pub fn cli_ok(doc: &Path, args: &[&str]) -> String {
    let out = cli(doc, args);
    assert_eq!(out.exit_code, 0, "{args:?}: {}", out.stderr);
    out.stdout
}

/// A document with the fixture taxonomy, conference and bibliography imported.
pub fn imported(dir: &Path) -> PathBuf {
    let doc = dir.join("conference-state.json");
    cli_ok(&doc, &["import-taxonomy", fixture("taxonomy.xml").to_str().unwrap()]);
    cli_ok(&doc, &["import-conference", fixture("conference.json").to_str().unwrap()]);
    cli_ok(&doc, &["ingest-bib", fixture("dblp.xml").to_str().unwrap()]);
    doc
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

pub async fn call_raw(app: &Router, method: &str, uri: &str, body: &str) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}
