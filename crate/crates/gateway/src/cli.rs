//! `paperassign` subcommands. Each one loads the conference document, runs a
//! single workflow operation and saves the document back when it changed.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paperassign_core::coi::CoiRecord;
use paperassign_core::workflow::{ApprovalTarget, Clock, EdgeKey, WhatIfOutcome, Workspace};
use paperassign_core::{Conference, PaperId, ReviewerId};
use serde::Serialize;

use crate::export::export_csv;
use crate::views::{CoiView, EdgeResponse, ProposalView, StageView};
use crate::{api, open_document, persist, read_file, GatewayError, DEFAULT_ACTOR};

#[derive(Debug, Parser)]
#[command(name = "paperassign", version, about = "Paper-reviewer assignment workflow")]
pub struct Cli {
    /// Conference document to read and update.
    #[arg(long, global = true, default_value = "conference.json")]
    pub conference: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Name recorded in the audit log.
    #[arg(long, global = true, default_value = DEFAULT_ACTOR)]
    pub actor: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replace the keyword taxonomy from an XML file.
    ImportTaxonomy { file: PathBuf },
    /// Replace papers, reviewers, roster, bids and settings from a JSON file.
    ImportConference { file: PathBuf },
    /// Load a DBLP-style XML dump for co-authorship checks.
    IngestBib { file: PathBuf },
    /// Report conflicts of interest.
    DetectCoi {
        /// Ingest this bibliography dump first.
        #[arg(long)]
        bib: Option<PathBuf>,
    },
    /// Run keyword rules, conflict detection and bid merging.
    BuildMatrix,
    /// Solve the assignment and store it for approval.
    Propose,
    /// Approve proposal edges.
    Approve(ApproveArgs),
    /// Manually assign a reviewer to a paper.
    Assign {
        paper_id: String,
        reviewer_id: String,
        /// Allow conflicts of interest and capacity overruns.
        #[arg(long)]
        force: bool,
    },
    /// Remove an assignment.
    Unassign { paper_id: String, reviewer_id: String },
    /// Re-solve with pinned or forbidden pairs without changing anything.
    WhatIf {
        /// PAPER:REVIEWER pair that must be kept.
        #[arg(long, value_parser = parse_pair)]
        pin: Vec<EdgeKey>,
        /// PAPER:REVIEWER pair that must not be used.
        #[arg(long, value_parser = parse_pair)]
        forbid: Vec<EdgeKey>,
    },
    /// Write the assignment as CSV.
    Export {
        /// Output file; standard output when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Serve the HTTP API for this conference.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ApproveArgs {
    /// Approve every edge.
    #[arg(long)]
    pub all: bool,
    /// Edge id to approve; repeatable.
    #[arg(long = "edge")]
    pub edges: Vec<u64>,
}

fn parse_pair(s: &str) -> Result<EdgeKey, String> {
    match s.split_once(':') {
        Some((p, r)) if !p.is_empty() && !r.is_empty() => Ok(EdgeKey::new(p, r)),
        _ => Err(format!("expected PAPER:REVIEWER, got `{s}`")),
    }
}

/// What a command produced: exit code, standard output and standard error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandResult {
    fn ok(stdout: String) -> Self {
        CommandResult {
            exit_code: 0,
            stdout,
            stderr: String::new(),
        }
    }

    fn error(e: &GatewayError) -> Self {
        CommandResult {
            exit_code: 1,
            stdout: String::new(),
            stderr: format!("error: {}: {e}\n", e.name()),
        }
    }
}

/// Runs one command. `serve` blocks until the server stops.
pub fn run(cli: Cli, clock: Arc<dyn Clock>) -> CommandResult {
    match execute(&cli, clock) {
        Ok(out) => CommandResult::ok(out),
        Err(e) => CommandResult::error(&e),
    }
}

fn execute(cli: &Cli, clock: Arc<dyn Clock>) -> Result<String, GatewayError> {
    let path = cli.conference.as_path();
    let mut ws = open_document(path)?.with_clock(clock);
    let actor = cli.actor.as_str();
    let json = cli.format == Format::Json;
    let before = ws.audit().len();

    let out = match &cli.command {
        Command::ImportTaxonomy { file } => {
            ws.import_taxonomy(&read_file(file)?, Some(file.display().to_string()), actor)?;
            let n = ws.taxonomy().map_or(0, |t| t.len());
            render(json, &Imported::new(&ws, n), || format!("imported taxonomy: {n} keywords\n"))
        }
        Command::ImportConference { file } => {
            let conf: Conference = serde_json::from_slice(&read_file(file)?).map_err(|e| {
                GatewayError::MalformedInput {
                    path: file.clone(),
                    message: e.to_string(),
                }
            })?;
            ws.import_conference(conf, actor)?;
            let n = ws.conference().papers.len();
            render(json, &Imported::new(&ws, n), || {
                format!(
                    "imported conference: {} papers, {} reviewers\n",
                    n,
                    ws.conference().reviewers.len()
                )
            })
        }
        Command::IngestBib { file } => {
            ws.ingest_bibliography(&read_file(file)?, actor)?;
            let n = ws.document().bibliography.as_ref().map_or(0, |b| b.len());
            render(json, &Imported::new(&ws, n), || format!("kept {n} bibliography records\n"))
        }
        Command::DetectCoi { bib } => {
            if let Some(file) = bib {
                ws.ingest_bibliography(&read_file(file)?, actor)?;
            }
            let conflicts = ws.detect_conflicts(actor)?.to_vec();
            render(json, &CoiView { conflicts: conflicts.clone() }, || coi_text(&conflicts))
        }
        Command::BuildMatrix => {
            ws.run_pipeline(actor)?;
            let m = ws.matrix().expect("pipeline stored a matrix");
            render(json, m, || {
                let mut s = String::new();
                for i in 0..m.rows() {
                    let row: Vec<String> = m.row(i).iter().map(|c| format!("{:.3}", c.factor)).collect();
                    let _ = writeln!(s, "{}\t{}", m.papers()[i], row.join("\t"));
                }
                s
            })
        }
        Command::Propose => {
            ws.propose(actor)?;
            render(json, &ProposalView::of(&ws), || proposal_text(&ws))
        }
        Command::Approve(args) => {
            let target = if args.all {
                ApprovalTarget::All
            } else {
                ApprovalTarget::Edges(args.edges.clone())
            };
            ws.approve(target, actor)?;
            render(json, &StageView::of(&ws), || format!("stage: {}\n", ws.stage()))
        }
        Command::Assign {
            paper_id,
            reviewer_id,
            force,
        } => {
            let edge = ws
                .manual_assign(&PaperId::new(paper_id), &ReviewerId::new(reviewer_id), *force, actor)?
                .clone();
            let body = EdgeResponse {
                stage: ws.stage(),
                edge: edge.clone(),
            };
            render(json, &body, || {
                format!("edge {}: {} -> {} ({})\n", edge.id, edge.paper_id, edge.reviewer_id, ws.stage())
            })
        }
        Command::Unassign { paper_id, reviewer_id } => {
            ws.manual_unassign(&PaperId::new(paper_id), &ReviewerId::new(reviewer_id), actor)?;
            render(json, &StageView::of(&ws), || format!("stage: {}\n", ws.stage()))
        }
        Command::WhatIf { pin, forbid } => {
            let out = ws.what_if(pin, forbid)?;
            render(json, &out, || what_if_text(&out))
        }
        Command::Export { output } => {
            let csv = export_csv(&ws)?;
            match output {
                Some(file) => {
                    std::fs::write(file, &csv).map_err(|e| GatewayError::Io {
                        path: file.clone(),
                        source: e,
                    })?;
                    Ok(String::new())
                }
                None => Ok(csv),
            }
        }
        Command::Serve { port } => {
            serve(ws, path, *port)?;
            return Ok(String::new());
        }
    }?;

    if ws.audit().len() != before {
        persist(path, &ws)?;
    }
    Ok(out)
}

fn render<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> Result<String, GatewayError> {
    if json {
        let mut s = serde_json::to_string_pretty(value).expect("payload serializes");
        s.push('\n');
        Ok(s)
    } else {
        Ok(text())
    }
}

#[derive(Serialize)]
struct Imported {
    stage: paperassign_core::Stage,
    count: usize,
}

impl Imported {
    fn new(ws: &Workspace, count: usize) -> Self {
        Imported {
            stage: ws.stage(),
            count,
        }
    }
}

fn coi_text(conflicts: &[CoiRecord]) -> String {
    let mut s = String::new();
    for c in conflicts {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", c.paper_id, c.reviewer_id, c.reason, c.evidence);
    }
    let _ = writeln!(s, "{} conflict records", conflicts.len());
    s
}

fn proposal_text(ws: &Workspace) -> String {
    let mut s = String::new();
    for e in ws.proposal().map(|p| p.edges.as_slice()).unwrap_or_default() {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{:.3}\tpass {}\t{}\t{}",
            e.id, e.paper_id, e.reviewer_id, e.factor, e.pass, e.origin, e.approval
        );
    }
    let _ = writeln!(s, "stage: {}", ws.stage());
    s
}

fn what_if_text(out: &WhatIfOutcome) -> String {
    let mut s = String::new();
    for e in &out.added {
        let _ = writeln!(s, "+ {e}");
    }
    for e in &out.removed {
        let _ = writeln!(s, "- {e}");
    }
    let _ = writeln!(
        s,
        "total weight {:.4} (delta {:+.4})",
        out.total_weight, out.weight_delta
    );
    s
}

fn serve(ws: Workspace, path: &Path, port: u16) -> Result<(), GatewayError> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| GatewayError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    rt.block_on(async {
        let addr = SocketAddr::from(([127, 0, 0, 1], port));
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| GatewayError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
        log::info!("serving {} on http://{addr}", path.display());
        let app = api::router(api::AppState::new(ws, Some(path.to_path_buf())));
        axum::serve(listener, app).await.map_err(|e| GatewayError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}
