//! Greedy assignment heuristic.
//!
//! Repeatedly picks the unserved paper with the fewest eligible reviewers
//! (ties: lower paper index) and gives it its best eligible reviewers by
//! factor (ties: lower current load, then lower reviewer index).

use std::cmp::Ordering;

use super::{AssignmentProblem, AssignmentProposal, Ledger, Origin, SolveError};

pub fn solve_greedy(problem: &AssignmentProblem) -> Result<AssignmentProposal, SolveError> {
    let mut ledger = Ledger::new(problem)?;
    let m = &problem.matrix;
    let (rows, cols) = (m.rows(), m.cols());

    let mut open: Vec<bool> = (0..rows).map(|p| ledger.per_paper[p] < problem.k).collect();
    let mut eligible: Vec<usize> = (0..rows)
        .map(|p| (0..cols).filter(|&r| ledger.eligible(p, r)).count())
        .collect();
    let mut starved = Vec::new();

    loop {
        let next = (0..rows)
            .filter(|&p| open[p])
            .min_by_key(|&p| (eligible[p], p));
        let Some(p) = next else { break };
        open[p] = false;

        let need = problem.k - ledger.per_paper[p];
        let mut candidates: Vec<usize> = (0..cols).filter(|&r| ledger.eligible(p, r)).collect();
        candidates.sort_by(|&a, &b| {
            m.cell(p, b)
                .factor
                .partial_cmp(&m.cell(p, a).factor)
                .unwrap_or(Ordering::Equal)
                .then(ledger.load[a].cmp(&ledger.load[b]))
                .then(a.cmp(&b))
        });
        if candidates.len() < need {
            starved.push(m.papers()[p].clone());
        }
        for r in candidates.into_iter().take(need) {
            let pass = ledger.per_paper[p] as u32 + 1;
            ledger.assign(p, r, pass, Origin::Automatic);
            if ledger.remaining[r] == 0 {
                for q in (0..rows).filter(|&q| open[q]) {
                    if problem.allowed(q, r) && !ledger.assigned.contains(&(q, r)) {
                        eligible[q] -= 1;
                    }
                }
            }
        }
    }

    if !starved.is_empty() {
        starved.sort();
        return Err(SolveError::Infeasible { papers: starved });
    }
    Ok(ledger.finish())
}
