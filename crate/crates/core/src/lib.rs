//! Reviewer-to-paper assignment engine.
//!
//! The pipeline runs: taxonomy and keyword selections → keyword rules →
//! set similarity → bid and conflict overlays → multi-pass maximum-weight
//! matching (or the greedy heuristic) → chair approval workflow.

pub mod bids;
pub mod coi;
pub mod conference;
pub mod ids;
pub mod keywords;
pub mod par;
pub mod similarity;
pub mod solver;
pub mod taxonomy;
pub mod workflow;

pub use bids::{Bid, BidMode};
pub use conference::{Conference, Config, SolverKind};
pub use ids::{PaperId, PersonId, ReviewerId};
pub use keywords::{CompetenceLevel, PaperKeywordSet, ReviewerSelection};
pub use par::Exec;
pub use similarity::{Cell, Provenance, SimilarityMatrix};
pub use solver::{AssignmentProblem, AssignmentProposal};
pub use taxonomy::{KeywordId, Taxonomy};
pub use workflow::{ConferenceDocument, Stage, Workspace};
