//! HTTP API over a single conference workspace.
//!
//! Mutations take the write lock, run against a copy of the workspace, persist
//! it, and only then replace the shared state. Reads share the lock.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use paperassign_core::workflow::{ApprovalTarget, EdgeKey, WorkflowError, Workspace};
use paperassign_core::{PaperId, ReviewerId};
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;

use crate::views::{CoiView, EdgeResponse, MatrixView, ProposalView, StageView, StatusView};
use crate::{persist, GatewayError};

#[derive(Clone)]
pub struct AppState {
    ws: Arc<RwLock<Workspace>>,
    path: Option<Arc<PathBuf>>,
}

impl AppState {
    /// `path`, when given, receives the saved document after every mutation.
    pub fn new(ws: Workspace, path: Option<PathBuf>) -> Self {
        AppState {
            ws: Arc::new(RwLock::new(ws)),
            path: path.map(Arc::new),
        }
    }

    pub async fn snapshot(&self) -> Workspace {
        self.ws.read().await.clone()
    }

    async fn mutate<T>(
        &self,
        op: impl FnOnce(&mut Workspace) -> Result<T, WorkflowError>,
    ) -> Result<(T, Workspace), ApiError> {
        let mut guard = self.ws.write().await;
        let mut next = guard.clone();
        let out = op(&mut next).map_err(GatewayError::from)?;
        if let Some(path) = &self.path {
            persist(path, &next)?;
        }
        *guard = next.clone();
        Ok((out, next))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError(GatewayError);

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        ApiError(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(GatewayError::BadRequest(e.body_text()))
    }
}

pub fn status_for(name: &str) -> StatusCode {
    match name {
        "UnknownEdge" | "UnknownPaper" | "UnknownReviewer" => StatusCode::NOT_FOUND,
        "IllegalState" | "DuplicateEdge" | "ConflictRequiresForce" | "CapacityRequiresForce"
        | "Infeasible" | "MissingTaxonomy" => StatusCode::CONFLICT,
        "IoError" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let name = self.0.name();
        let body = ErrorBody {
            error: name.to_string(),
            message: self.0.to_string(),
        };
        (status_for(name), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/matrix", get(get_matrix))
        .route("/api/proposal", get(get_proposal))
        .route("/api/propose", post(post_propose))
        .route("/api/approve", post(post_approve))
        .route("/api/edges", post(post_edge))
        .route("/api/edges/:paper_id/:reviewer_id", delete(delete_edge))
        .route("/api/whatif", post(post_whatif))
        .route("/api/coi", get(get_coi))
        .route("/api/status", get(get_status))
        .with_state(state)
}

async fn get_matrix(State(s): State<AppState>) -> ApiResult<MatrixView> {
    let ws = s.ws.read().await;
    MatrixView::of(&ws).map(Json).ok_or_else(|| {
        ApiError(GatewayError::Workflow(WorkflowError::IllegalState {
            op: "matrix",
            stage: ws.stage(),
        }))
    })
}

async fn get_proposal(State(s): State<AppState>) -> ApiResult<ProposalView> {
    Ok(Json(ProposalView::of(&*s.ws.read().await)))
}

async fn get_coi(State(s): State<AppState>) -> ApiResult<CoiView> {
    Ok(Json(CoiView {
        conflicts: s.ws.read().await.conflicts().to_vec(),
    }))
}

async fn get_status(State(s): State<AppState>) -> ApiResult<StatusView> {
    Ok(Json(StatusView::of(&*s.ws.read().await)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProposeResponse {
    pub stage: paperassign_core::Stage,
    pub proposal: paperassign_core::AssignmentProposal,
}

/// Builds the matrix first when the conference is still in Draft, since the
/// API has no separate build step.
async fn post_propose(State(s): State<AppState>) -> ApiResult<ProposeResponse> {
    let (proposal, ws) = s
        .mutate(|ws| {
            if ws.stage() == paperassign_core::Stage::Draft {
                ws.run_pipeline(actor())?;
            }
            ws.propose(actor()).cloned()
        })
        .await?;
    Ok(Json(ProposeResponse {
        stage: ws.stage(),
        proposal,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AllLiteral {
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum EdgeIds {
    All(AllLiteral),
    Ids(Vec<u64>),
}

/// Accepts `"all"`, `{"edge_ids": "all"}` or `{"edge_ids": [..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum ApproveBody {
    Bare(AllLiteral),
    Object { edge_ids: EdgeIds },
}

async fn post_approve(
    State(s): State<AppState>,
    body: Result<Json<ApproveBody>, JsonRejection>,
) -> ApiResult<StageView> {
    let Json(body) = body?;
    let target = match body {
        ApproveBody::Bare(_) | ApproveBody::Object {
            edge_ids: EdgeIds::All(_),
        } => ApprovalTarget::All,
        ApproveBody::Object {
            edge_ids: EdgeIds::Ids(ids),
        } => ApprovalTarget::Edges(ids),
    };
    let (stage, _) = s.mutate(|ws| ws.approve(target, actor())).await?;
    Ok(Json(StageView { stage }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AssignRequest {
    pub paper_id: PaperId,
    pub reviewer_id: ReviewerId,
    #[serde(default)]
    pub force: bool,
}

async fn post_edge(
    State(s): State<AppState>,
    body: Result<Json<AssignRequest>, JsonRejection>,
) -> ApiResult<EdgeResponse> {
    let Json(req) = body?;
    let (edge, ws) = s
        .mutate(|ws| ws.manual_assign(&req.paper_id, &req.reviewer_id, req.force, actor()).cloned())
        .await?;
    Ok(Json(EdgeResponse {
        stage: ws.stage(),
        edge,
    }))
}

async fn delete_edge(
    State(s): State<AppState>,
    Path((paper_id, reviewer_id)): Path<(String, String)>,
) -> ApiResult<StageView> {
    let (p, r) = (PaperId::new(paper_id), ReviewerId::new(reviewer_id));
    let (_, ws) = s.mutate(|ws| ws.manual_unassign(&p, &r, actor())).await?;
    Ok(Json(StageView::of(&ws)))
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct WhatIfRequest {
    #[serde(default)]
    pub pinned: Vec<EdgeKey>,
    #[serde(default)]
    pub forbidden: Vec<EdgeKey>,
}

async fn post_whatif(
    State(s): State<AppState>,
    body: Result<Json<WhatIfRequest>, JsonRejection>,
) -> ApiResult<paperassign_core::workflow::WhatIfOutcome> {
    let Json(req) = body?;
    let ws = s.snapshot().await;
    let out = tokio::task::spawn_blocking(move || ws.what_if(&req.pinned, &req.forbidden))
        .await
        .expect("what-if task does not panic")
        .map_err(GatewayError::from)?;
    Ok(Json(out))
}

/// Actor recorded for API mutations; matches the CLI default.
fn actor() -> &'static str {
    crate::DEFAULT_ACTOR
}
