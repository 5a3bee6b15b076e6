//! `k` rounds of maximum-weight matching, one reviewer per paper per round.
//!
//! In round `t` the rows are the papers that still have fewer than `t`
//! reviewers and the columns are capacity slots: one per unit of each
//! reviewer's remaining capacity (capped at the number of rows, since a
//! reviewer can take at most one slot per paper in a round).
//!
//! A round's best matching can strand a paper in a later round even when a
//! complete assignment exists. After each round the remainder is checked with
//! a max flow; if the round broke a feasible state, it is re-solved as a
//! min-cost flow that maximizes the round's weight over matchings that still
//! extend to a complete assignment.

use super::flow::FlowGraph;
use super::hungarian::{hungarian_max_weight, MatchError, WeightGrid, WEIGHT_SCALE};
use super::{AssignmentProblem, AssignmentProposal, Ledger, Origin, SolveError};

pub fn solve_multipass(problem: &AssignmentProblem) -> Result<AssignmentProposal, SolveError> {
    let mut ledger = Ledger::new(problem)?;
    let m = &problem.matrix;

    for pass in 1..=problem.k {
        let feasible_before = extendable(&ledger, &[]);
        let papers: Vec<usize> = (0..m.rows()).filter(|&p| ledger.per_paper[p] < pass).collect();
        if papers.is_empty() {
            continue;
        }
        let slots: Vec<usize> = (0..m.cols())
            .flat_map(|r| std::iter::repeat_n(r, ledger.remaining[r].min(papers.len())))
            .collect();
        let starved = |rows: &[usize]| SolveError::Infeasible {
            papers: rows.iter().map(|&i| m.papers()[papers[i]].clone()).collect(),
        };
        if slots.is_empty() {
            return Err(starved(&(0..papers.len()).collect::<Vec<_>>()));
        }

        let weights = papers
            .iter()
            .flat_map(|&p| slots.iter().map(move |&r| m.cell(p, r).factor))
            .collect();
        let mut grid = WeightGrid::new(papers.len(), slots.len(), weights);
        for (i, &p) in papers.iter().enumerate() {
            for (s, &r) in slots.iter().enumerate() {
                if !problem.allowed(p, r) || ledger.assigned.contains(&(p, r)) {
                    grid.forbid(i, s);
                }
            }
        }

        let matching = match hungarian_max_weight(&grid) {
            Ok(m) => m,
            Err(MatchError::Infeasible(rows)) => return Err(starved(&rows)),
            Err(MatchError::NonFiniteWeight(..)) | Err(MatchError::EmptyGrid) => {
                unreachable!("matrix factors are finite and the grid is non-empty")
            }
        };
        if matching.len() < papers.len() {
            let matched: Vec<usize> = matching.iter().map(|&(i, _)| i).collect();
            let missing: Vec<usize> = (0..papers.len()).filter(|i| !matched.contains(i)).collect();
            return Err(starved(&missing));
        }
        let mut chosen: Vec<(usize, usize)> = matching.into_iter().map(|(i, s)| (papers[i], slots[s])).collect();
        if feasible_before && !extendable(&ledger, &chosen) {
            log::debug!("pass {pass}: best matching strands a later pass, re-solving");
            chosen = extendable_pass(&ledger, &papers);
        }
        for (p, r) in chosen {
            ledger.assign(p, r, pass as u32, Origin::Automatic);
        }
    }
    Ok(ledger.finish())
}

/// Whether, after also taking `extra`, every paper can still reach `k`
/// distinct allowed reviewers within remaining capacity.
fn extendable(ledger: &Ledger, extra: &[(usize, usize)]) -> bool {
    let problem = ledger.problem;
    let (rows, cols) = (problem.matrix.rows(), problem.matrix.cols());
    let mut need: Vec<i64> = ledger.per_paper.iter().map(|&n| problem.k.saturating_sub(n) as i64).collect();
    let mut room: Vec<i64> = ledger.remaining.iter().map(|&c| c as i64).collect();
    for &(p, r) in extra {
        need[p] -= 1;
        room[r] -= 1;
    }
    // source, papers, reviewers, sink
    let (s, t) = (0, rows + cols + 1);
    let mut g = FlowGraph::new(rows + cols + 2);
    for (p, &n) in need.iter().enumerate() {
        if n <= 0 {
            continue;
        }
        g.add(s, 1 + p, n, 0);
        for r in 0..cols {
            if open_pair(ledger, p, r) && !extra.contains(&(p, r)) {
                g.add(1 + p, 1 + rows + r, 1, 0);
            }
        }
    }
    for (r, &c) in room.iter().enumerate() {
        if c > 0 {
            g.add(1 + rows + r, t, c, 0);
        }
    }
    let total: i64 = need.iter().filter(|&&n| n > 0).sum();
    g.min_cost_flow(s, t, total) == total
}

/// The round's maximum-weight matching among those that keep the remaining
/// rounds completable. Only called from a feasible state.
///
/// Each open paper sends one unit through its round node (earning the cell
/// weight) and its remaining need through a zero-weight node; both meet at a
/// per-pair node of capacity one so the reviewers stay distinct.
fn extendable_pass(ledger: &Ledger, papers: &[usize]) -> Vec<(usize, usize)> {
    let problem = ledger.problem;
    let m = &problem.matrix;
    let (rows, cols) = (m.rows(), m.cols());
    let round = |p: usize| 1 + p;
    let rest = |p: usize| 1 + rows + p;
    let reviewer = |r: usize| 1 + 2 * rows + r;
    let pairs_base = 1 + 2 * rows + cols;
    let pair = |p: usize, r: usize| pairs_base + p * cols + r;
    let (s, t) = (0, pairs_base + rows * cols);
    let mut g = FlowGraph::new(t + 1);

    let mut total = 0;
    let mut round_arcs = Vec::new();
    for p in 0..rows {
        let need = problem.k.saturating_sub(ledger.per_paper[p]) as i64;
        let in_round = papers.contains(&p) as i64;
        if need == 0 {
            continue;
        }
        total += need;
        if in_round == 1 {
            g.add(s, round(p), 1, 0);
        }
        if need > in_round {
            g.add(s, rest(p), need - in_round, 0);
        }
        for r in 0..cols {
            if !open_pair(ledger, p, r) {
                continue;
            }
            if in_round == 1 {
                let cost = -((m.cell(p, r).factor * WEIGHT_SCALE).round() as i128);
                round_arcs.push((p, r, g.add(round(p), pair(p, r), 1, cost)));
            }
            g.add(rest(p), pair(p, r), 1, 0);
            g.add(pair(p, r), reviewer(r), 1, 0);
        }
    }
    for (r, &c) in ledger.remaining.iter().enumerate() {
        if c > 0 {
            g.add(reviewer(r), t, c as i64, 0);
        }
    }
    let routed = g.min_cost_flow(s, t, total);
    debug_assert_eq!(routed, total, "extendable_pass called from an infeasible state");
    round_arcs
        .into_iter()
        .filter(|&(_, _, a)| g.flow_on(a) > 0)
        .map(|(p, r, _)| (p, r))
        .collect()
}

fn open_pair(ledger: &Ledger, p: usize, r: usize) -> bool {
    ledger.problem.allowed(p, r) && !ledger.assigned.contains(&(p, r))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::matrix;
    use super::super::{check_proposal, score_proposal, Approval};
    use super::*;
    use crate::ids::{PaperId, ReviewerId};
    use crate::similarity::Cell;

    #[test]
    fn forced_complete_assignment() {
        let p = AssignmentProblem::new(matrix(&[vec![0.5, 0.5], vec![0.5, 0.5]]), 2);
        assert_eq!(p.capacity, vec![2, 2]);
        let prop = solve_multipass(&p).unwrap();
        assert!(check_proposal(&prop, &p).is_empty());
        let s = score_proposal(&prop, &p.matrix).unwrap();
        assert_eq!(s.load.values().copied().collect::<Vec<_>>(), vec![2, 2]);
        assert!(prop.edges.iter().all(|e| e.approval == Approval::Pending));
    }

    #[test]
    fn single_paper_argmax() {
        let p = AssignmentProblem::new(matrix(&[vec![0.2, 0.9, 0.4]]), 1);
        let prop = solve_multipass(&p).unwrap();
        assert_eq!(prop.edges.len(), 1);
        assert_eq!(prop.edges[0].reviewer_id, ReviewerId::new("r1"));
        assert_eq!(prop.edges[0].pass, 1);
        assert_eq!(prop.edges[0].factor, 0.9);
    }

    #[test]
    fn conflict_row_is_infeasible() {
        let mut m = matrix(&[vec![0.2, 0.9], vec![0.5, 0.5]]);
        *m.cell_mut(0, 0) = Cell::CONFLICT;
        *m.cell_mut(0, 1) = Cell::CONFLICT;
        let p = AssignmentProblem::new(m, 1);
        assert_eq!(
            solve_multipass(&p),
            Err(SolveError::Infeasible {
                papers: vec![PaperId::new("p0")]
            })
        );
    }

    #[test]
    fn passes_take_distinct_reviewers() {
        let rows = vec![vec![0.9, 0.1, 0.5], vec![0.8, 0.7, 0.6], vec![0.3, 0.2, 0.1]];
        let p = AssignmentProblem::new(matrix(&rows), 2);
        let prop = solve_multipass(&p).unwrap();
        assert!(check_proposal(&prop, &p).is_empty(), "{:?}", check_proposal(&prop, &p));
        assert_eq!(prop.edges.iter().filter(|e| e.pass == 1).count(), 3);
        assert_eq!(prop.edges.iter().filter(|e| e.pass == 2).count(), 3);
    }

    #[test]
    fn pins_consume_capacity() {
        let mut p = AssignmentProblem::new(matrix(&[vec![0.9, 0.1], vec![0.8, 0.2]]), 1);
        p.pin(&"p1".into(), &"r0".into()).unwrap();
        let prop = solve_multipass(&p).unwrap();
        assert!(check_proposal(&prop, &p).is_empty());
        let pinned = prop.find(&"p1".into(), &"r0".into()).unwrap();
        assert_eq!((pinned.pass, pinned.origin), (0, Origin::Manual));
        assert!(prop.contains(&"p0".into(), &"r1".into()));
    }

    #[test]
    fn excluded_pairs_are_skipped() {
        let mut p = AssignmentProblem::new(matrix(&[vec![0.2, 0.9, 0.4]]), 1);
        p.exclude(&"p0".into(), &"r1".into()).unwrap();
        let prop = solve_multipass(&p).unwrap();
        assert_eq!(prop.edges[0].reviewer_id, ReviewerId::new("r2"));
    }

    #[test]
    fn pinned_conflict_rejected() {
        let mut m = matrix(&[vec![0.2, 0.9]]);
        *m.cell_mut(0, 1) = Cell::CONFLICT;
        let mut p = AssignmentProblem::new(m, 1);
        p.pin(&"p0".into(), &"r1".into()).unwrap();
        assert!(matches!(solve_multipass(&p), Err(SolveError::PinnedConflict(..))));
    }

    #[test]
    fn zero_capacity_is_infeasible() {
        let p = AssignmentProblem::new(matrix(&[vec![0.5, 0.5]]), 1).with_capacities(vec![0, 0]);
        assert!(matches!(solve_multipass(&p), Err(SolveError::Infeasible { .. })));
    }

    #[test]
    fn deterministic() {
        let rows = vec![vec![0.5; 4]; 6];
        let p = AssignmentProblem::new(matrix(&rows), 2);
        assert_eq!(solve_multipass(&p).unwrap(), solve_multipass(&p).unwrap());
    }
}
