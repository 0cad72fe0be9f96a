//! Restricted shortest path: minimize a second edge weighting over paths
//! whose length stays within a budget.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::graph::{hop_bound, shortest_distances_masked, DiGraph, EdgeId, Mask, Path, VertexId};

#[derive(Clone, Debug)]
pub struct RspQuery<'a> {
    pub graph: &'a DiGraph,
    pub source: VertexId,
    pub target: VertexId,
    /// Length budget `T`; the hop bound on unit-length graphs.
    pub budget: f64,
    /// Per-edge weights to minimize, indexed by edge id.
    pub weights: &'a [f64],
    /// Removed vertices and edges.
    pub forbidden: Option<&'a Mask>,
    /// Approximation parameter; zero selects exact mode.
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RspResult {
    pub path: Path,
    pub weight: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RspError {
    #[error("no path from {0} to {1} meets the length budget")]
    NoFeasiblePath(VertexId, VertexId),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("weights must be finite and nonnegative, one per edge")]
    InvalidWeights,
}

impl RspQuery<'_> {
    fn alive(&self, e: EdgeId) -> bool {
        self.forbidden.is_none_or(|m| m.edge_alive(e))
    }

    fn endpoints_alive(&self) -> bool {
        self.forbidden
            .is_none_or(|m| m.vertex_alive(self.source) && m.vertex_alive(self.target))
    }

    fn weights_ok(&self) -> bool {
        self.weights.len() == self.graph.m() && self.weights.iter().all(|w| w.is_finite() && *w >= 0.0)
    }

    fn result(&self, walk: &[EdgeId]) -> Option<RspResult> {
        let path = Path::shortcut(self.graph, walk)?;
        let weight = path.edges.iter().map(|&e| self.weights[e]).sum();
        Some(RspResult { path, weight })
    }
}

#[derive(Clone, Copy)]
enum Step {
    Start,
    Carry,
    Edge(EdgeId),
}

/// Minimum-weight path with at most `⌊budget⌋` hops. Ties go to fewer hops,
/// then to the smaller predecessor id.
pub fn rsp_exact_hop(q: &RspQuery) -> Option<RspResult> {
    let g = q.graph;
    let n = g.n();
    if q.source == q.target || !q.endpoints_alive() || !q.weights_ok() {
        return None;
    }
    let h = hop_bound(q.budget).min(n.saturating_sub(1));
    if h == 0 {
        return None;
    }
    let mut val = vec![vec![f64::INFINITY; n]; h + 1];
    let mut step = vec![vec![Step::Start; n]; h + 1];
    val[0][q.source] = 0.0;
    for t in 1..=h {
        for w in 0..n {
            let mut best = val[t - 1][w];
            let mut how = Step::Carry;
            for &e in g.in_edges(w) {
                if !q.alive(e) {
                    continue;
                }
                let p = g.edge(e).source;
                let cand = val[t - 1][p] + q.weights[e];
                if cand < best {
                    best = cand;
                    how = Step::Edge(e);
                }
            }
            val[t][w] = best;
            step[t][w] = how;
        }
    }
    if val[h][q.target].is_infinite() {
        return None;
    }
    let mut walk = Vec::new();
    let (mut t, mut w) = (h, q.target);
    while t > 0 {
        match step[t][w] {
            Step::Carry => t -= 1,
            Step::Edge(e) => {
                walk.push(e);
                w = g.edge(e).source;
                t -= 1;
            }
            Step::Start => break,
        }
    }
    walk.reverse();
    q.result(&walk)
}

/// Minimum-length path from `source` using only edges accepted by `keep`.
fn min_length_path(q: &RspQuery, keep: impl Fn(EdgeId) -> bool) -> Option<(f64, Vec<EdgeId>)> {
    let g = q.graph;
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<EdgeId>> = vec![None; n];
    let mut done = vec![false; n];
    dist[q.source] = 0.0;
    let mut heap = BinaryHeap::from([Reverse((OrdF(0.0), q.source))]);
    while let Some(Reverse((OrdF(d), v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &e in g.out_edges(v) {
            if !q.alive(e) || !keep(e) {
                continue;
            }
            let t = g.edge(e).target;
            let nd = d + g.edge(e).length;
            if !done[t] && nd < dist[t] {
                dist[t] = nd;
                pred[t] = Some(e);
                heap.push(Reverse((OrdF(nd), t)));
            }
        }
    }
    if dist[q.target].is_infinite() {
        return None;
    }
    let mut walk = Vec::new();
    let mut v = q.target;
    while let Some(e) = pred[v] {
        walk.push(e);
        v = g.edge(e).source;
    }
    walk.reverse();
    Some((dist[q.target], walk))
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct OrdF(f64);

impl Eq for OrdF {}

impl Ord for OrdF {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dynamic program over scaled weight: `len[W][v]` is the least length of a
/// walk to `v` with scaled weight at most `W`. Returns the walk for the
/// smallest `W ≤ max_w` that reaches the target within budget.
fn scaled_dp(q: &RspQuery, scaled: &[usize], max_w: usize) -> Option<Vec<EdgeId>> {
    let g = q.graph;
    let n = g.n();
    let zero_edges: Vec<EdgeId> = (0..g.m()).filter(|&e| q.alive(e) && scaled[e] == 0).collect();
    let mut len: Vec<Vec<f64>> = Vec::new();
    let mut how: Vec<Vec<(Step, usize)>> = Vec::new();
    for w in 0..=max_w {
        let mut row = vec![f64::INFINITY; n];
        let mut hrow = vec![(Step::Start, 0usize); n];
        if w == 0 {
            row[q.source] = 0.0;
        } else {
            for v in 0..n {
                row[v] = len[w - 1][v];
                hrow[v] = (Step::Carry, w - 1);
            }
            for v in 0..n {
                for &e in g.in_edges(v) {
                    let s = scaled[e];
                    if !q.alive(e) || s == 0 || s > w {
                        continue;
                    }
                    let p = g.edge(e).source;
                    let cand = len[w - s][p] + g.edge(e).length;
                    if cand < row[v] {
                        row[v] = cand;
                        hrow[v] = (Step::Edge(e), w - s);
                    }
                }
            }
        }
        if !zero_edges.is_empty() {
            let mut heap: BinaryHeap<Reverse<(OrdF, VertexId)>> =
                (0..n).filter(|&v| row[v].is_finite()).map(|v| Reverse((OrdF(row[v]), v))).collect();
            while let Some(Reverse((OrdF(d), v))) = heap.pop() {
                if d > row[v] {
                    continue;
                }
                for &e in g.out_edges(v) {
                    if scaled[e] != 0 || !q.alive(e) {
                        continue;
                    }
                    let t = g.edge(e).target;
                    let nd = d + g.edge(e).length;
                    if nd < row[t] {
                        row[t] = nd;
                        hrow[t] = (Step::Edge(e), w);
                        heap.push(Reverse((OrdF(nd), t)));
                    }
                }
            }
        }
        let hit = row[q.target] <= q.budget;
        len.push(row);
        how.push(hrow);
        if hit {
            let mut walk = Vec::new();
            let (mut lw, mut v) = (w, q.target);
            loop {
                match how[lw][v] {
                    (Step::Start, _) => break,
                    (Step::Carry, prev) => lw = prev,
                    (Step::Edge(e), prev) => {
                        walk.push(e);
                        v = g.edge(e).source;
                        lw = prev;
                    }
                }
                if walk.len() > n * (max_w + 2) {
                    return None;
                }
            }
            walk.reverse();
            return Some(walk);
        }
    }
    None
}

/// Budget-feasible path whose weight is at most `(1+ε)` times optimal.
///
/// Bounds `LB ≤ OPT ≤ UB` come from the bottleneck threshold; a coarse test
/// narrows `UB/LB` to a constant, then weights are rounded down to multiples
/// of `ε·LB/(n−1)` and the exact scaled DP finishes.
pub fn rsp_fptas(q: &RspQuery) -> Result<RspResult, RspError> {
    if !(q.epsilon > 0.0 && q.epsilon.is_finite()) {
        return Err(RspError::InvalidEpsilon(q.epsilon));
    }
    if !q.weights_ok() {
        return Err(RspError::InvalidWeights);
    }
    let g = q.graph;
    let infeasible = RspError::NoFeasiblePath(q.source, q.target);
    if q.source == q.target || !q.endpoints_alive() {
        return Err(infeasible);
    }
    let lengths = shortest_distances_masked(g, q.source, false, q.forbidden);
    if !(lengths[q.target] <= q.budget) {
        return Err(infeasible);
    }
    // smallest weight level c whose sub-network admits a feasible path
    let mut levels: Vec<f64> = (0..g.m()).filter(|&e| q.alive(e)).map(|e| q.weights[e]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let fits = |c: f64| min_length_path(q, |e| q.weights[e] <= c).is_some_and(|(d, _)| d <= q.budget);
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if fits(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let c = levels[lo];
    if c == 0.0 {
        let (_, walk) = min_length_path(q, |e| q.weights[e] == 0.0).expect("level check found a path");
        return q.result(&walk).ok_or(infeasible);
    }
    let hops = (g.n() - 1).max(1) as f64;
    let mut lb = c;
    let (_, walk) = min_length_path(q, |e| q.weights[e] <= c).expect("level check found a path");
    let first = q.result(&walk).ok_or_else(|| infeasible.clone())?;
    let mut ub = (hops * c).min(first.weight);
    let mut best_walk = Some(first.path.edges);
    while ub > 8.0 * lb {
        let v = (lb * ub).sqrt();
        let delta = v / hops;
        let scaled: Vec<usize> = q.weights.iter().map(|&w| (w / delta).floor() as usize).collect();
        match scaled_dp(q, &scaled, hops as usize) {
            Some(walk) => {
                let r = q.result(&walk).ok_or_else(|| infeasible.clone())?;
                if r.weight < ub {
                    ub = r.weight;
                    best_walk = Some(r.path.edges);
                }
                ub = ub.min(2.0 * v);
            }
            None => lb = v,
        }
    }
    let delta = q.epsilon * lb / hops;
    let scaled: Vec<usize> = q.weights.iter().map(|&w| (w / delta).floor() as usize).collect();
    let max_w = (ub / delta).floor() as usize + 1;
    if let Some(walk) = scaled_dp(q, &scaled, max_w) {
        let r = q.result(&walk).ok_or_else(|| infeasible.clone())?;
        if best_walk.as_ref().is_none_or(|b| r.weight <= b.iter().map(|&e| q.weights[e]).sum::<f64>()) {
            return Ok(r);
        }
    }
    let walk = best_walk.ok_or(infeasible.clone())?;
    q.result(&walk).ok_or(infeasible)
}

/// Exact restricted shortest path for general lengths by Pareto labels.
pub fn rsp_exact_labels(q: &RspQuery) -> Option<RspResult> {
    let g = q.graph;
    if q.source == q.target || !q.endpoints_alive() || !q.weights_ok() {
        return None;
    }
    let to_t = shortest_distances_masked(g, q.target, true, q.forbidden);
    if !(to_t[q.source] <= q.budget) {
        return None;
    }
    struct Label {
        vertex: VertexId,
        len: f64,
        weight: f64,
        pred: Option<(usize, EdgeId)>,
    }
    let mut labels: Vec<Label> = vec![Label { vertex: q.source, len: 0.0, weight: 0.0, pred: None }];
    let mut perm: Vec<Vec<(f64, f64)>> = vec![Vec::new(); g.n()];
    let mut heap = BinaryHeap::from([Reverse((OrdF(0.0), OrdF(0.0), 0usize))]);
    while let Some(Reverse((_, _, id))) = heap.pop() {
        let (v, len, weight) = (labels[id].vertex, labels[id].len, labels[id].weight);
        if perm[v].iter().any(|&(l, w)| l <= len && w <= weight) {
            continue;
        }
        perm[v].push((len, weight));
        if v == q.target {
            let mut walk = Vec::new();
            let mut cur = id;
            while let Some((prev, e)) = labels[cur].pred {
                walk.push(e);
                cur = prev;
            }
            walk.reverse();
            return q.result(&walk);
        }
        for &e in g.out_edges(v) {
            if !q.alive(e) {
                continue;
            }
            let t = g.edge(e).target;
            let nl = len + g.edge(e).length;
            let nw = weight + q.weights[e];
            if nl + to_t[t] > q.budget || perm[t].iter().any(|&(l, w)| l <= nl && w <= nw) {
                continue;
            }
            labels.push(Label { vertex: t, len: nl, weight: nw, pred: Some((id, e)) });
            heap.push(Reverse((OrdF(nw), OrdF(nl), labels.len() - 1)));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    /// u=0, a=1, b=2, c=3, v=4: u→a→v and u→b→c→v.
    fn two_routes() -> (DiGraph, Vec<f64>) {
        let g = DiGraph::from_pairs(5, &[(0, 1), (1, 4), (0, 2), (2, 3), (3, 4)]).unwrap();
        (g, vec![2.0, 3.0, 0.0, 0.0, 1.0])
    }

    fn query<'a>(g: &'a DiGraph, w: &'a [f64], s: usize, t: usize, budget: f64, eps: f64) -> RspQuery<'a> {
        RspQuery { graph: g, source: s, target: t, budget, weights: w, forbidden: None, epsilon: eps }
    }

    #[test]
    fn hop_dp_respects_hop_bound() {
        let (g, w) = two_routes();
        let r = rsp_exact_hop(&query(&g, &w, 0, 4, 2.0, 0.0)).unwrap();
        assert_eq!(r.weight, 5.0);
        assert_eq!(r.path.vertices, vec![0, 1, 4]);
        let r = rsp_exact_hop(&query(&g, &w, 0, 4, 3.0, 0.0)).unwrap();
        assert_eq!(r.weight, 1.0);
        assert_eq!(r.path.vertices, vec![0, 2, 3, 4]);
        assert!(rsp_exact_hop(&query(&g, &w, 0, 4, 1.0, 0.0)).is_none());
    }

    #[test]
    fn hop_dp_prefers_fewer_hops_on_ties() {
        let g = DiGraph::from_pairs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let w = vec![0.0, 0.0, 0.0];
        let r = rsp_exact_hop(&query(&g, &w, 0, 2, 2.0, 0.0)).unwrap();
        assert_eq!(r.path.vertices, vec![0, 2]);
    }

    #[test]
    fn forbidden_vertex_is_avoided() {
        let (g, w) = two_routes();
        let mut m = Mask::new(&g);
        m.remove_vertex(&g, 2);
        let mut q = query(&g, &w, 0, 4, 3.0, 0.0);
        q.forbidden = Some(&m);
        assert_eq!(rsp_exact_hop(&q).unwrap().weight, 5.0);
    }

    #[test]
    fn fptas_single_path() {
        let g = DiGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let w = vec![1.5, 2.5];
        let r = rsp_fptas(&query(&g, &w, 0, 2, 2.0, 0.1)).unwrap();
        assert_eq!(r.weight, 4.0);
    }

    #[test]
    fn fptas_picks_lighter_of_close_pair() {
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]).unwrap();
        let w = vec![5.2, 5.2, 5.0, 5.0];
        let r = rsp_fptas(&query(&g, &w, 0, 3, 2.0, 0.01)).unwrap();
        assert!(r.weight <= 10.1);
        assert_eq!(r.weight, 10.0);
    }

    #[test]
    fn fptas_reports_infeasible_budget() {
        let (g, w) = two_routes();
        assert_eq!(rsp_fptas(&query(&g, &w, 0, 4, 1.0, 0.1)), Err(RspError::NoFeasiblePath(0, 4)));
        assert_eq!(rsp_fptas(&query(&g, &w, 0, 4, 3.0, 0.0)), Err(RspError::InvalidEpsilon(0.0)));
    }

    #[test]
    fn fptas_zero_weight_route() {
        let (g, mut w) = two_routes();
        w[4] = 0.0;
        let r = rsp_fptas(&query(&g, &w, 0, 4, 3.0, 0.5)).unwrap();
        assert_eq!(r.weight, 0.0);
    }

    #[test]
    fn labels_on_weighted_graph() {
        let g = DiGraph::new(
            3,
            vec![
                Edge { source: 0, target: 1, length: 1.0, cost: 1.0 },
                Edge { source: 1, target: 2, length: 1.0, cost: 1.0 },
                Edge { source: 0, target: 2, length: 1.5, cost: 1.0 },
            ],
        )
        .unwrap();
        let w = vec![0.1, 0.1, 1.0];
        let q = query(&g, &w, 0, 2, 2.0, 0.0);
        assert_eq!(rsp_exact_labels(&q).unwrap().path.vertices, vec![0, 1, 2]);
        let q = query(&g, &w, 0, 2, 1.9, 0.0);
        assert_eq!(rsp_exact_labels(&q).unwrap().path.vertices, vec![0, 2]);
        let r = rsp_fptas(&query(&g, &w, 0, 2, 1.9, 0.1)).unwrap();
        assert_eq!(r.path.vertices, vec![0, 2]);
    }
}
