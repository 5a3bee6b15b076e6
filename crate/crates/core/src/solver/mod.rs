//! Load-balanced assignment of reviewers to papers.

mod flow;
pub mod greedy;
pub mod hungarian;
pub mod multipass;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{PaperId, ReviewerId};
use crate::similarity::{MatrixError, SimilarityMatrix};

pub use greedy::solve_greedy;
pub use hungarian::{hungarian_max_weight, MatchError, WeightGrid};
pub use multipass::solve_multipass;

use crate::conference::SolverKind;
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Approval {
    Pending,
    Approved,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Automatic,
    Manual,
}

impl fmt::Display for Approval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalEdge {
    pub id: u64,
    pub paper_id: PaperId,
    pub reviewer_id: ReviewerId,
    pub factor: f64,
    /// Matching pass that produced the edge; 0 for pinned and manual edges.
    pub pass: u32,
    pub approval: Approval,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AssignmentProposal {
    pub edges: Vec<ProposalEdge>,
}

impl AssignmentProposal {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, paper: &PaperId, reviewer: &ReviewerId) -> bool {
        self.find(paper, reviewer).is_some()
    }

    pub fn find(&self, paper: &PaperId, reviewer: &ReviewerId) -> Option<&ProposalEdge> {
        self.edges
            .iter()
            .find(|e| &e.paper_id == paper && &e.reviewer_id == reviewer)
    }

    pub fn reviewers_of<'a>(&'a self, paper: &'a PaperId) -> impl Iterator<Item = &'a ReviewerId> + 'a {
        self.edges
            .iter()
            .filter(move |e| &e.paper_id == paper)
            .map(|e| &e.reviewer_id)
    }

    pub fn pairs(&self) -> BTreeSet<(PaperId, ReviewerId)> {
        self.edges
            .iter()
            .map(|e| (e.paper_id.clone(), e.reviewer_id.clone()))
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("no feasible assignment; papers short of reviewers: {}", join(.papers))]
    Infeasible { papers: Vec<PaperId> },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("capacity vector has {got} entries for {want} reviewers")]
    CapacityShape { got: usize, want: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("pinned pair {0}/{1} is a conflict of interest")]
    PinnedConflict(PaperId, ReviewerId),
}

impl SolveError {
    pub fn name(&self) -> &'static str {
        match self {
            SolveError::Infeasible { .. } => "Infeasible",
            SolveError::InvalidK => "InvalidK",
            SolveError::CapacityShape { .. } => "InvalidCapacity",
            SolveError::Matrix(e) => e.name(),
            SolveError::PinnedConflict(..) => "ConflictRequiresForce",
        }
    }
}

fn join(ids: &[PaperId]) -> String {
    ids.iter().map(PaperId::as_str).collect::<Vec<_>>().join(", ")
}

/// One solver run: the merged matrix, `k` reviewers per paper, per-reviewer
/// capacity (aligned with `matrix.reviewers()`), excluded pairs and pairs
/// pinned in advance. Conflict cells are always excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentProblem {
    pub matrix: SimilarityMatrix,
    pub k: usize,
    pub capacity: Vec<usize>,
    pub excluded: BTreeSet<(usize, usize)>,
    pub pinned: BTreeSet<(usize, usize)>,
}

impl AssignmentProblem {
    /// Problem with the balanced default capacity `ceil(k·|P|/|R|)` for everyone.
    pub fn new(matrix: SimilarityMatrix, k: usize) -> Self {
        let cap = if matrix.cols() == 0 {
            0
        } else {
            (k * matrix.rows()).div_ceil(matrix.cols())
        };
        let capacity = vec![cap; matrix.cols()];
        AssignmentProblem {
            matrix,
            k,
            capacity,
            excluded: BTreeSet::new(),
            pinned: BTreeSet::new(),
        }
    }

    pub fn with_capacities(mut self, capacity: Vec<usize>) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn set_capacity(&mut self, reviewer: &ReviewerId, cap: usize) -> Result<(), MatrixError> {
        let j = self.matrix.reviewer_index(reviewer)?;
        self.capacity[j] = cap;
        Ok(())
    }

    pub fn exclude(&mut self, paper: &PaperId, reviewer: &ReviewerId) -> Result<(), MatrixError> {
        let pair = (self.matrix.paper_index(paper)?, self.matrix.reviewer_index(reviewer)?);
        self.excluded.insert(pair);
        Ok(())
    }

    pub fn pin(&mut self, paper: &PaperId, reviewer: &ReviewerId) -> Result<(), MatrixError> {
        let pair = (self.matrix.paper_index(paper)?, self.matrix.reviewer_index(reviewer)?);
        self.pinned.insert(pair);
        Ok(())
    }

    /// True when the solver may place `(paper, reviewer)`.
    pub fn allowed(&self, paper: usize, reviewer: usize) -> bool {
        !self.matrix.is_conflict(paper, reviewer) && !self.excluded.contains(&(paper, reviewer))
    }

    fn check(&self) -> Result<(), SolveError> {
        if self.k == 0 {
            return Err(SolveError::InvalidK);
        }
        if self.capacity.len() != self.matrix.cols() {
            return Err(SolveError::CapacityShape {
                got: self.capacity.len(),
                want: self.matrix.cols(),
            });
        }
        if let Some(&(p, r)) = self.pinned.iter().find(|&&(p, r)| self.matrix.is_conflict(p, r)) {
            return Err(SolveError::PinnedConflict(
                self.matrix.papers()[p].clone(),
                self.matrix.reviewers()[r].clone(),
            ));
        }
        Ok(())
    }
}

/// Mutable bookkeeping shared by both solvers.
struct Ledger<'a> {
    problem: &'a AssignmentProblem,
    assigned: BTreeSet<(usize, usize)>,
    per_paper: Vec<usize>,
    remaining: Vec<usize>,
    load: Vec<usize>,
    edges: Vec<ProposalEdge>,
}

impl<'a> Ledger<'a> {
    fn new(problem: &'a AssignmentProblem) -> Result<Self, SolveError> {
        problem.check()?;
        let m = &problem.matrix;
        let mut ledger = Ledger {
            problem,
            assigned: BTreeSet::new(),
            per_paper: vec![0; m.rows()],
            remaining: problem.capacity.clone(),
            load: vec![0; m.cols()],
            edges: Vec::new(),
        };
        for &(p, r) in &problem.pinned {
            ledger.assign(p, r, 0, Origin::Manual);
        }
        Ok(ledger)
    }

    fn assign(&mut self, p: usize, r: usize, pass: u32, origin: Origin) {
        let m = &self.problem.matrix;
        self.assigned.insert((p, r));
        self.per_paper[p] += 1;
        self.remaining[r] = self.remaining[r].saturating_sub(1);
        self.load[r] += 1;
        self.edges.push(ProposalEdge {
            id: self.edges.len() as u64,
            paper_id: m.papers()[p].clone(),
            reviewer_id: m.reviewers()[r].clone(),
            factor: m.cell(p, r).factor,
            pass,
            approval: Approval::Pending,
            origin,
        });
    }

    fn eligible(&self, p: usize, r: usize) -> bool {
        self.remaining[r] > 0 && self.problem.allowed(p, r) && !self.assigned.contains(&(p, r))
    }

    fn finish(self) -> AssignmentProposal {
        AssignmentProposal { edges: self.edges }
    }
}

pub fn solve(problem: &AssignmentProblem, kind: SolverKind) -> Result<AssignmentProposal, SolveError> {
    match kind {
        SolverKind::Multipass => solve_multipass(problem),
        SolverKind::Greedy => solve_greedy(problem),
    }
}

/// Solves independent problems (what-if scenarios, say); results keep input order.
pub fn solve_all(
    problems: &[AssignmentProblem],
    kind: SolverKind,
    exec: Exec,
) -> Vec<Result<AssignmentProposal, SolveError>> {
    par::map_slice(exec, problems, |p| solve(p, kind))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub total_weight: f64,
    /// Smallest edge factor; `None` for an empty proposal.
    pub min_edge: Option<f64>,
    pub load: BTreeMap<ReviewerId, usize>,
}

/// Totals a proposal against the matrix it was built from. Every matrix
/// reviewer appears in `load`, with 0 when unassigned.
pub fn score_proposal(prop: &AssignmentProposal, m: &SimilarityMatrix) -> Result<Score, MatrixError> {
    let mut load: BTreeMap<ReviewerId, usize> =
        m.reviewers().iter().map(|r| (r.clone(), 0)).collect();
    let mut total = 0.0;
    let mut min: Option<f64> = None;
    for e in &prop.edges {
        let f = m.get(&e.paper_id, &e.reviewer_id)?.factor;
        total += f;
        min = Some(min.map_or(f, |x| x.min(f)));
        *load.get_mut(&e.reviewer_id).expect("reviewer resolved above") += 1;
    }
    Ok(Score {
        total_weight: total,
        min_edge: min,
        load,
    })
}

/// A broken proposal invariant, as reported by [`check_proposal`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    WrongReviewerCount { paper: PaperId, got: usize },
    DuplicatePair { paper: PaperId, reviewer: ReviewerId },
    OverCapacity { reviewer: ReviewerId, load: usize },
    ConflictEdge { paper: PaperId, reviewer: ReviewerId },
    UnknownId(String),
}

/// Checks an automatic proposal against its problem: exactly `k` distinct
/// reviewers per paper, loads within capacity, no conflict or excluded cells.
pub fn check_proposal(prop: &AssignmentProposal, problem: &AssignmentProblem) -> Vec<Violation> {
    let m = &problem.matrix;
    let mut out = Vec::new();
    let mut per_paper = vec![0usize; m.rows()];
    let mut load = vec![0usize; m.cols()];
    let mut seen = BTreeSet::new();
    for e in &prop.edges {
        let (Ok(p), Ok(r)) = (m.paper_index(&e.paper_id), m.reviewer_index(&e.reviewer_id)) else {
            out.push(Violation::UnknownId(format!("{}/{}", e.paper_id, e.reviewer_id)));
            continue;
        };
        if !seen.insert((p, r)) {
            out.push(Violation::DuplicatePair {
                paper: e.paper_id.clone(),
                reviewer: e.reviewer_id.clone(),
            });
        }
        if !problem.allowed(p, r) {
            out.push(Violation::ConflictEdge {
                paper: e.paper_id.clone(),
                reviewer: e.reviewer_id.clone(),
            });
        }
        per_paper[p] += 1;
        load[r] += 1;
    }
    for (p, &n) in per_paper.iter().enumerate() {
        if n != problem.k {
            out.push(Violation::WrongReviewerCount {
                paper: m.papers()[p].clone(),
                got: n,
            });
        }
    }
    for (r, &n) in load.iter().enumerate() {
        if n > problem.capacity[r] {
            out.push(Violation::OverCapacity {
                reviewer: m.reviewers()[r].clone(),
                load: n,
            });
        }
    }
    out
}
