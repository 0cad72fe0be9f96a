use super::{shortest_distances_masked, stretch_budget, DiGraph, EdgeId, GraphError, Mask, Path, VertexId};

/// A demand with its distance, stretch budget and the vertices that can lie
/// on a budget-respecting route.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandContext {
    pub demand: (VertexId, VertexId),
    pub dist: f64,
    pub stretch_budget: f64,
    pub support_vertices: Vec<VertexId>,
}

pub fn support_set(g: &DiGraph, demand: (VertexId, VertexId), k: f64) -> DemandContext {
    support_set_masked(g, demand, k, None)
}

/// `{w : d(u,w) + d(w,v) ≤ k·d(u,v)}` from one forward and one backward sweep.
pub fn support_set_masked(g: &DiGraph, demand: (VertexId, VertexId), k: f64, mask: Option<&Mask>) -> DemandContext {
    let (u, v) = demand;
    let from_u = shortest_distances_masked(g, u, false, mask);
    let to_v = shortest_distances_masked(g, v, true, mask);
    let dist = from_u[v];
    let budget = stretch_budget(k, dist);
    let support_vertices = (0..g.n()).filter(|&w| from_u[w] + to_v[w] <= budget).collect();
    DemandContext { demand, dist, stretch_budget: budget, support_vertices }
}

pub fn enumerate_stretch_paths(
    g: &DiGraph,
    demand: (VertexId, VertexId),
    k: f64,
    max_paths: usize,
) -> Result<Vec<Path>, GraphError> {
    enumerate_stretch_paths_masked(g, demand, k, max_paths, None)
}

/// All simple `u→v` paths within the stretch budget, in lexicographic order of
/// their vertex sequences.
pub fn enumerate_stretch_paths_masked(
    g: &DiGraph,
    demand: (VertexId, VertexId),
    k: f64,
    max_paths: usize,
    mask: Option<&Mask>,
) -> Result<Vec<Path>, GraphError> {
    if k.is_nan() || k < 1.0 {
        return Err(GraphError::InvalidStretch(k));
    }
    let (u, v) = demand;
    let to_v = shortest_distances_masked(g, v, true, mask);
    if to_v[u].is_infinite() {
        return Err(GraphError::Unreachable(u, v));
    }
    let budget = stretch_budget(k, to_v[u]);
    let mut out = Vec::new();
    let mut on_path = vec![false; g.n()];
    let mut stack: Vec<EdgeId> = Vec::new();
    on_path[u] = true;
    let mut ctx = Dfs { g, mask, to_v: &to_v, budget, target: v, max_paths, out: &mut out };
    ctx.visit(u, 0.0, &mut on_path, &mut stack)?;
    Ok(out)
}

struct Dfs<'a> {
    g: &'a DiGraph,
    mask: Option<&'a Mask>,
    to_v: &'a [f64],
    budget: f64,
    target: VertexId,
    max_paths: usize,
    out: &'a mut Vec<Path>,
}

impl Dfs<'_> {
    fn visit(&mut self, w: VertexId, len: f64, on_path: &mut [bool], stack: &mut Vec<EdgeId>) -> Result<(), GraphError> {
        if w == self.target {
            if self.out.len() >= self.max_paths {
                return Err(GraphError::PathOverflow(self.max_paths));
            }
            self.out.push(Path::from_edges(self.g, stack.clone()).expect("dfs stack is a path"));
            return Ok(());
        }
        for &e in self.g.out_edges(w) {
            if self.mask.is_some_and(|m| !m.edge_alive(e)) {
                continue;
            }
            let t = self.g.edge(e).target;
            let nl = len + self.g.edge(e).length;
            if on_path[t] || nl + self.to_v[t] > self.budget {
                continue;
            }
            on_path[t] = true;
            stack.push(e);
            let r = self.visit(t, nl, on_path, stack);
            stack.pop();
            on_path[t] = false;
            r?;
        }
        Ok(())
    }
}

/// Largest `τ` such that some route within the stretch budget uses only edges
/// with `x_e ≥ τ`; zero when the demand is unreachable.
pub fn bottleneck_capacity(g: &DiGraph, demand: (VertexId, VertexId), k: f64, x: &[f64], mask: Option<&Mask>) -> f64 {
    let (u, v) = demand;
    let base = mask.cloned().unwrap_or_else(|| Mask::new(g));
    let dist = shortest_distances_masked(g, u, false, Some(&base))[v];
    if dist.is_infinite() {
        return 0.0;
    }
    let budget = stretch_budget(k, dist);
    let mut levels: Vec<f64> = (0..g.m()).filter(|&e| base.edge_alive(e)).map(|e| x[e]).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let feasible = |tau: f64| {
        let mut m = base.clone();
        for e in 0..g.m() {
            if x[e] < tau {
                m.remove_edge(e);
            }
        }
        shortest_distances_masked(g, u, false, Some(&m))[v] <= budget
    };
    // levels sorted descending: find the first feasible one
    let (mut lo, mut hi) = (0usize, levels.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    levels.get(lo).copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn triangle_paths_for_long_demand() {
        let g = triangle();
        let paths = enumerate_stretch_paths(&g, (0, 2), 2.0, 10).unwrap();
        let seqs: Vec<_> = paths.iter().map(|p| p.vertices.clone()).collect();
        assert_eq!(seqs, vec![vec![0, 1, 2], vec![0, 2]]);
    }

    #[test]
    fn stretch_one_keeps_direct_edge() {
        let g = triangle();
        let paths = enumerate_stretch_paths(&g, (0, 2), 1.0, 10).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].vertices, vec![0, 2]);
    }

    #[test]
    fn cycle_only_direct_edge() {
        let g = cycle(6);
        let paths = enumerate_stretch_paths(&g, (2, 3), 4.0, 10).unwrap();
        assert_eq!(paths.len(), 1);
    }

    #[test]
    fn overflow_is_reported() {
        let g = diamond();
        assert_eq!(enumerate_stretch_paths(&g, (0, 3), 2.0, 2), Err(GraphError::PathOverflow(2)));
    }

    #[test]
    fn support_sets() {
        let g = triangle();
        assert_eq!(support_set(&g, (0, 2), 2.0).support_vertices, vec![0, 1, 2]);
        assert_eq!(support_set(&g, (0, 2), 1.0).support_vertices, vec![0, 2]);
        let d = diamond();
        let ctx = support_set(&d, (0, 3), 2.0);
        assert_eq!(ctx.support_vertices, vec![0, 1, 2, 3]);
        assert_eq!(ctx.dist, 1.0);
    }

    #[test]
    fn distance_support_can_exceed_simple_paths() {
        // w=2 is reachable only through a, and leaves only back to a
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 1), (1, 3), (0, 3)]).unwrap();
        let ctx = support_set(&g, (0, 3), 4.0);
        assert!(ctx.support_vertices.contains(&2));
        let paths = enumerate_stretch_paths(&g, (0, 3), 4.0, 100).unwrap();
        assert!(paths.iter().all(|p| !p.vertices.contains(&2)));
    }

    #[test]
    fn bottleneck_prefers_wide_route() {
        let g = triangle();
        let x = [0.5, 0.25, 0.1];
        assert_eq!(bottleneck_capacity(&g, (0, 2), 2.0, &x, None), 0.25);
        assert_eq!(bottleneck_capacity(&g, (0, 2), 1.0, &x, None), 0.1);
    }
}
