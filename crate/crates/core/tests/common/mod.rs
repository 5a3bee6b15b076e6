//! Generators and independent oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's own algorithms: similarity is
//! recomputed from raw parent links, matchings by exhaustive search and
//! feasibility by a plain augmenting-path max flow.

#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use paperassign_core::similarity::{Cell, SimilarityMatrix};
use paperassign_core::taxonomy::NodeSpec;
use paperassign_core::{PaperId, ReviewerId, Taxonomy};
use rand::Rng;

/// Parent links of a random rooted tree: node `i > 0` hangs under some `j < i`.
#[derive(Debug, Clone)]
pub struct RawTree {
    pub parent: Vec<Option<usize>>,
}

impl RawTree {
    pub fn random(rng: &mut impl Rng, n: usize) -> Self {
        let parent = (0..n).map(|i| (i > 0).then(|| rng.gen_range(0..i))).collect();
        RawTree { parent }
    }

    /// From proptest-drawn fractions in [0, 1): node i's parent is floor(f·i).
    pub fn from_fractions(fracs: &[f64]) -> Self {
        let mut parent = vec![None];
        for (i, f) in fracs.iter().enumerate() {
            let i = i + 1;
            parent.push(Some(((f * i as f64) as usize).min(i - 1)));
        }
        RawTree { parent }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn id(i: usize) -> String {
        format!("k{i}")
    }

    pub fn taxonomy(&self) -> Taxonomy {
        let specs = self
            .parent
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let id = Self::id(i);
                let parent = p.map(Self::id);
                NodeSpec::new(&id, &id, parent.as_deref())
            })
            .collect();
        Taxonomy::from_parent_links(specs).expect("generated tree is valid")
    }

    pub fn depth(&self, mut i: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[i] {
            i = p;
            d += 1;
        }
        d
    }

    /// Path from `i` up to the root, `i` first.
    pub fn ancestors(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![i];
        while let Some(p) = self.parent[i] {
            out.push(p);
            i = p;
        }
        out
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.parent[c] == Some(i)).collect()
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.children(i).is_empty()
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let up = self.ancestors(a);
        *self
            .ancestors(b)
            .iter()
            .find(|x| up.contains(x))
            .expect("same root")
    }

    /// Depth-ratio similarity straight from the definition.
    pub fn similarity(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 1.0;
        }
        let denom = self.depth(a) + self.depth(b);
        2.0 * self.depth(self.lca(a, b)) as f64 / denom as f64
    }
}

pub fn pid(i: usize) -> PaperId {
    PaperId::new(format!("p{i}"))
}

pub fn rid(j: usize) -> ReviewerId {
    ReviewerId::new(format!("r{j}"))
}

/// Matrix with factors on a 0.05 grid (stored as multiples of 1/20).
pub fn grid_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> (SimilarityMatrix, Vec<Vec<u32>>) {
    let units: Vec<Vec<u32>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(0..=20)).collect())
        .collect();
    let m = SimilarityMatrix::from_factors(
        (0..rows).map(pid).collect(),
        (0..cols).map(rid).collect(),
        units.iter().flatten().map(|&u| u as f64 / 20.0).collect(),
    )
    .unwrap();
    (m, units)
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> SimilarityMatrix {
    SimilarityMatrix::from_factors(
        (0..rows).map(pid).collect(),
        (0..cols).map(rid).collect(),
        (0..rows * cols).map(|_| rng.gen::<f64>()).collect(),
    )
    .unwrap()
}

/// Maximum total over all injective row→column maps covering min(rows, cols) pairs.
pub fn brute_force_max(units: &[Vec<u32>]) -> u32 {
    let rows = units.len();
    let cols = units[0].len();
    if rows <= cols {
        best_rows(units, 0, &mut vec![false; cols])
    } else {
        let t: Vec<Vec<u32>> = (0..cols).map(|j| (0..rows).map(|i| units[i][j]).collect()).collect();
        best_rows(&t, 0, &mut vec![false; rows])
    }
}

fn best_rows(units: &[Vec<u32>], row: usize, used: &mut Vec<bool>) -> u32 {
    if row == units.len() {
        return 0;
    }
    let mut best = 0;
    for c in 0..used.len() {
        if !used[c] {
            used[c] = true;
            best = best.max(units[row][c] + best_rows(units, row + 1, used));
            used[c] = false;
        }
    }
    best
}

/// Whether every paper can get `k` distinct allowed reviewers within capacities.
pub fn flow_feasible(allowed: &[Vec<bool>], k: usize, capacity: &[usize]) -> bool {
    let (p, r) = (allowed.len(), capacity.len());
    // nodes: source 0, papers 1..=p, reviewers p+1..=p+r, sink p+r+1
    let n = p + r + 2;
    let sink = n - 1;
    let mut cap = vec![vec![0i64; n]; n];
    for i in 0..p {
        cap[0][1 + i] = k as i64;
        for j in 0..r {
            if allowed[i][j] {
                cap[1 + i][1 + p + j] = 1;
            }
        }
    }
    for j in 0..r {
        cap[1 + p + j][sink] = capacity[j] as i64;
    }
    let mut flow = 0i64;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[0] = 0;
        let mut q = VecDeque::from([0]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 0 {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            break;
        }
        let mut v = sink;
        while v != 0 {
            let u = prev[v];
            cap[u][v] -= 1;
            cap[v][u] += 1;
            v = u;
        }
        flow += 1;
    }
    flow == (p * k) as i64
}

/// Marks roughly `rate` of the cells Conflict, skipping any mark that would
/// make the instance infeasible.
pub fn add_feasible_conflicts(
    rng: &mut impl Rng,
    m: &mut SimilarityMatrix,
    rate: f64,
    k: usize,
    capacity: &[usize],
) -> usize {
    let mut allowed = vec![vec![true; m.cols()]; m.rows()];
    let mut marked = 0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if rng.gen::<f64>() < rate {
                allowed[i][j] = false;
                if flow_feasible(&allowed, k, capacity) {
                    *m.cell_mut(i, j) = Cell::CONFLICT;
                    marked += 1;
                } else {
                    allowed[i][j] = true;
                }
            }
        }
    }
    marked
}

/// Count of reviewers per paper and load per reviewer for a list of pairs.
pub fn tallies<'a>(
    pairs: impl Iterator<Item = (&'a PaperId, &'a ReviewerId)>,
) -> (BTreeMap<PaperId, usize>, BTreeMap<ReviewerId, usize>) {
    let mut per_paper = BTreeMap::new();
    let mut load = BTreeMap::new();
    for (p, r) in pairs {
        *per_paper.entry(p.clone()).or_insert(0) += 1;
        *load.entry(r.clone()).or_insert(0) += 1;
    }
    (per_paper, load)
}

pub fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}
