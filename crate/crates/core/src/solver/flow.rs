//! Small min-cost flow (successive shortest paths over a queue-based
//! Bellman-Ford), used by the multipass solver to keep later passes feasible.

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: i64,
    cost: i128,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct FlowGraph {
    arcs: Vec<Edge>,
    out: Vec<Vec<usize>>,
}

impl FlowGraph {
    pub(crate) fn new(nodes: usize) -> Self {
        FlowGraph {
            arcs: Vec::new(),
            out: vec![Vec::new(); nodes],
        }
    }

    /// Adds `u -> v` and returns its arc index (the reverse arc is index + 1).
    pub(crate) fn add(&mut self, u: usize, v: usize, cap: i64, cost: i128) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Edge { to: v, cap, cost });
        self.arcs.push(Edge { to: u, cap: 0, cost: -cost });
        self.out[u].push(id);
        self.out[v].push(id + 1);
        id
    }

    pub(crate) fn flow_on(&self, arc: usize) -> i64 {
        self.arcs[arc + 1].cap
    }

    /// Pushes up to `limit` units from `s` to `t` at minimum cost; returns the
    /// amount routed. The graph must start without negative cycles.
    pub(crate) fn min_cost_flow(&mut self, s: usize, t: usize, limit: i64) -> i64 {
        let n = self.out.len();
        let mut routed = 0;
        while routed < limit {
            let mut dist = vec![i128::MAX; n];
            let mut via = vec![usize::MAX; n];
            let mut queued = vec![false; n];
            let mut queue = std::collections::VecDeque::from([s]);
            dist[s] = 0;
            while let Some(u) = queue.pop_front() {
                queued[u] = false;
                for &a in &self.out[u] {
                    let arc = &self.arcs[a];
                    if arc.cap > 0 && dist[u] + arc.cost < dist[arc.to] {
                        dist[arc.to] = dist[u] + arc.cost;
                        via[arc.to] = a;
                        if !queued[arc.to] {
                            queued[arc.to] = true;
                            queue.push_back(arc.to);
                        }
                    }
                }
            }
            if dist[t] == i128::MAX {
                break;
            }
            let mut push = limit - routed;
            let mut v = t;
            while v != s {
                let a = via[v];
                push = push.min(self.arcs[a].cap);
                v = self.arcs[a ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let a = via[v];
                self.arcs[a].cap -= push;
                self.arcs[a ^ 1].cap += push;
                v = self.arcs[a ^ 1].to;
            }
            routed += push;
        }
        routed
    }
}
