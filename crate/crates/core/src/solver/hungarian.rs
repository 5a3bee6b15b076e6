//! Maximum-weight bipartite matching (Kuhn–Munkres) on a rectangular grid.
//!
//! Weights are quantized to integers (`WEIGHT_SCALE` units) so that optimality
//! and tie detection are exact. Every allowed cell receives a bonus larger than
//! any achievable weight difference, so the solver first maximizes the number of
//! allowed pairs and then their total weight. Among optimal matchings the one
//! with the lexicographically smallest column sequence is returned.

use thiserror::Error;

/// Weights are rounded to multiples of `1 / WEIGHT_SCALE` before matching.
pub const WEIGHT_SCALE: f64 = 1e9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("weight grid is empty")]
    EmptyGrid,
    #[error("weight at ({0}, {1}) is not finite")]
    NonFiniteWeight(usize, usize),
    #[error("rows {0:?} cannot be matched to an allowed column")]
    Infeasible(Vec<usize>),
}

/// Dense `rows × cols` weights with a forbidden-cell mask.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    forbidden: Vec<bool>,
}

impl WeightGrid {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), rows * cols, "weights must be rows × cols");
        WeightGrid {
            rows,
            cols,
            weights,
            forbidden: vec![false; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged weight grid");
        WeightGrid::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weight(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.cols + c]
    }

    pub fn forbid(&mut self, r: usize, c: usize) {
        self.forbidden[r * self.cols + c] = true;
    }

    pub fn is_forbidden(&self, r: usize, c: usize) -> bool {
        self.forbidden[r * self.cols + c]
    }
}

/// Returns the matched `(row, col)` pairs sorted by row.
///
/// When `rows <= cols` every row must be matched to an allowed column, otherwise
/// [`MatchError::Infeasible`] lists the rows left over. When `rows > cols` the
/// surplus rows stay unmatched.
pub fn hungarian_max_weight(grid: &WeightGrid) -> Result<Vec<(usize, usize)>, MatchError> {
    if grid.rows == 0 || grid.cols == 0 {
        return Err(MatchError::EmptyGrid);
    }
    let n = grid.rows.max(grid.cols);

    let mut quantized = vec![0i128; grid.rows * grid.cols];
    let (mut lo, mut hi) = (i128::MAX, i128::MIN);
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let w = grid.weight(r, c);
            if !w.is_finite() {
                return Err(MatchError::NonFiniteWeight(r, c));
            }
            let q = (w * WEIGHT_SCALE).round() as i128;
            quantized[r * grid.cols + c] = q;
            if !grid.is_forbidden(r, c) {
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
    }
    if lo > hi {
        // Everything forbidden.
        lo = 0;
        hi = 0;
    }
    let bonus = (hi - lo) * n as i128 + 1;
    // Profits: allowed = shifted weight + bonus, forbidden and padding = 0.
    let profit = |r: usize, c: usize| -> i128 {
        if r >= grid.rows || c >= grid.cols || grid.is_forbidden(r, c) {
            0
        } else {
            quantized[r * grid.cols + c] - lo + bonus
        }
    };
    let cost: Vec<i128> = (0..n * n).map(|x| -profit(x / n, x % n)).collect();

    let (mut row_to_col, u, v) = min_cost_assignment(n, &cost);
    lexicographic_refine(n, &cost, &u, &v, &mut row_to_col);

    let mut matched = Vec::new();
    let mut starved = Vec::new();
    for (r, &c) in row_to_col.iter().enumerate().take(grid.rows) {
        if c < grid.cols && !grid.is_forbidden(r, c) {
            matched.push((r, c));
        } else if grid.rows <= grid.cols {
            starved.push(r);
        }
    }
    if !starved.is_empty() {
        return Err(MatchError::Infeasible(starved));
    }
    Ok(matched)
}

/// Square min-cost assignment with potentials. Returns `row_to_col` and the
/// dual potentials `u` (rows) and `v` (cols), with `cost[i][j] - u[i] - v[j] >= 0`
/// everywhere and `= 0` on the assignment.
fn min_cost_assignment(n: usize, cost: &[i128]) -> (Vec<usize>, Vec<i128>, Vec<i128>) {
    const INF: i128 = i128::MAX / 4;
    // 1-based with a sentinel column 0.
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Rewrites an optimal assignment into the lexicographically smallest optimal one.
///
/// Optimal assignments are exactly the perfect matchings on tight edges (zero
/// reduced cost). Rows are fixed in order; row `i` moves to a smaller tight
/// column `c` whenever an alternating path through unfixed rows hands its
/// current column to `c`'s owner chain.
fn lexicographic_refine(n: usize, cost: &[i128], u: &[i128], v: &[i128], row_to_col: &mut [usize]) {
    let tight = |i: usize, j: usize| cost[i * n + j] - u[i] - v[j] == 0;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| tight(i, j)).collect())
        .collect();
    let mut col_to_row = vec![0usize; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut locked = vec![false; n];
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = Vec::with_capacity(n);

    for i in 0..n {
        let target = row_to_col[i];
        for &c in adj[i].iter().take_while(|&&c| c < target) {
            if locked[c] {
                continue;
            }
            let start = col_to_row[c];
            // BFS over rows from `start`, looking for a tight path ending at `target`.
            seen.iter_mut().for_each(|s| *s = false);
            seen[c] = true;
            queue.clear();
            queue.push(start);
            let mut head = 0;
            let mut found = false;
            'bfs: while head < queue.len() {
                let x = queue[head];
                head += 1;
                for &d in &adj[x] {
                    if locked[d] || seen[d] {
                        continue;
                    }
                    seen[d] = true;
                    parent[d] = x;
                    if d == target {
                        found = true;
                        break 'bfs;
                    }
                    queue.push(col_to_row[d]);
                }
            }
            if !found {
                continue;
            }
            let mut d = target;
            loop {
                let x = parent[d];
                let prev = row_to_col[x];
                row_to_col[x] = d;
                col_to_row[d] = x;
                if x == start {
                    break;
                }
                d = prev;
            }
            row_to_col[i] = c;
            col_to_row[c] = i;
            break;
        }
        locked[row_to_col[i]] = true;
    }
}
