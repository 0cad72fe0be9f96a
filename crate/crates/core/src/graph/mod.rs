//! Directed graphs with edge lengths and costs, masks for fault sets, and
//! stretch-bounded path machinery.

mod fault;
mod format;
mod paths;
mod shortest;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fault::{count_fault_sets, fault_sets, FaultKind, FaultModel, FaultSet};
pub use format::{parse_graph, write_graph, ParseError};
pub use paths::{
    bottleneck_capacity, enumerate_stretch_paths, enumerate_stretch_paths_masked, support_set, support_set_masked,
    DemandContext,
};
pub use shortest::{
    arborescence, arborescence_masked, shortest_distances, shortest_distances_masked, shortest_path_tree, Direction,
    ShortestPathTree,
};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Absolute slack added to the stretch factor in every budget comparison.
pub const STRETCH_TOL: f64 = 1e-12;

/// Length budget for a stretch-`k` path of a pair at distance `dist`.
pub fn stretch_budget(k: f64, dist: f64) -> f64 {
    (k + STRETCH_TOL) * dist
}

/// Largest hop count allowed by a length budget on a unit-length graph.
pub fn hop_bound(budget: f64) -> usize {
    if budget.is_finite() && budget >= 0.0 {
        budget.floor() as usize
    } else if budget.is_infinite() && budget > 0.0 {
        usize::MAX
    } else {
        0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: VertexId,
    pub target: VertexId,
    pub length: f64,
    pub cost: f64,
}

impl Edge {
    pub fn unit(source: VertexId, target: VertexId) -> Self {
        Self { source, target, length: 1.0, cost: 1.0 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("vertex {0} out of range")]
    VertexOutOfRange(VertexId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("parallel edge {0} -> {1}")]
    ParallelEdge(VertexId, VertexId),
    #[error("edge {0} has invalid length {1}")]
    InvalidLength(EdgeId, f64),
    #[error("edge {0} has invalid cost {1}")]
    InvalidCost(EdgeId, f64),
    #[error("more than {0} stretch paths")]
    PathOverflow(usize),
    #[error("no path from {0} to {1}")]
    Unreachable(VertexId, VertexId),
    #[error("stretch factor {0} is below 1")]
    InvalidStretch(f64),
}

/// Immutable directed graph. Out-lists are sorted by target and in-lists by
/// source, which fixes the order of every traversal.
#[derive(Clone, Debug, PartialEq)]
pub struct DiGraph {
    n: usize,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
    unit_length: bool,
    index: HashMap<(VertexId, VertexId), EdgeId>,
}

impl DiGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(edges.len());
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            if e.source >= n {
                return Err(GraphError::VertexOutOfRange(e.source));
            }
            if e.target >= n {
                return Err(GraphError::VertexOutOfRange(e.target));
            }
            if e.source == e.target {
                return Err(GraphError::SelfLoop(e.source));
            }
            if !(e.length.is_finite() && e.length >= 0.0) {
                return Err(GraphError::InvalidLength(id, e.length));
            }
            if !(e.cost.is_finite() && e.cost >= 0.0) {
                return Err(GraphError::InvalidCost(id, e.cost));
            }
            if index.insert((e.source, e.target), id).is_some() {
                return Err(GraphError::ParallelEdge(e.source, e.target));
            }
            out_adj[e.source].push(id);
            in_adj[e.target].push(id);
        }
        for list in &mut out_adj {
            list.sort_by_key(|&id| edges[id].target);
        }
        for list in &mut in_adj {
            list.sort_by_key(|&id| edges[id].source);
        }
        let unit_length = edges.iter().all(|e| e.length == 1.0);
        Ok(Self { n, edges, out_adj, in_adj, unit_length, index })
    }

    /// Unit lengths and unit costs.
    pub fn from_pairs(n: usize, pairs: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        Self::new(n, pairs.iter().map(|&(s, t)| Edge::unit(s, t)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_adj[v]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_adj[v]
    }

    pub fn is_unit_length(&self) -> bool {
        self.unit_length
    }

    pub fn find_edge(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.index.get(&(u, v)).copied()
    }

    pub fn cost_of(&self, ids: &[EdgeId]) -> f64 {
        ids.iter().map(|&e| self.edges[e].cost).sum()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.out_adj[v].len().max(self.in_adj[v].len())).max().unwrap_or(0)
    }
}

/// A simple directed path.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    pub length: f64,
}

impl Path {
    pub fn source(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn target(&self) -> VertexId {
        *self.vertices.last().unwrap()
    }

    pub fn hops(&self) -> usize {
        self.edges.len()
    }

    pub fn from_edges(g: &DiGraph, edges: Vec<EdgeId>) -> Option<Self> {
        let first = *edges.first()?;
        let mut vertices = vec![g.edge(first).source];
        let mut length = 0.0;
        for &e in &edges {
            let edge = g.edge(e);
            if edge.source != *vertices.last().unwrap() {
                return None;
            }
            vertices.push(edge.target);
            length += edge.length;
        }
        Some(Self { vertices, edges, length })
    }

    pub fn from_vertices(g: &DiGraph, vertices: &[VertexId]) -> Option<Self> {
        let edges = vertices
            .windows(2)
            .map(|w| g.find_edge(w[0], w[1]))
            .collect::<Option<Vec<_>>>()?;
        Self::from_edges(g, edges)
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = self.vertices.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Removes cycles from a walk, keeping the first-to-last visit structure.
    pub fn shortcut(g: &DiGraph, walk: &[EdgeId]) -> Option<Self> {
        let first = *walk.first()?;
        let mut verts = vec![g.edge(first).source];
        let mut edges: Vec<EdgeId> = Vec::new();
        for &e in walk {
            let t = g.edge(e).target;
            if let Some(pos) = verts.iter().position(|&v| v == t) {
                verts.truncate(pos + 1);
                edges.truncate(pos);
            } else {
                verts.push(t);
                edges.push(e);
            }
        }
        if edges.is_empty() {
            return None;
        }
        Self::from_edges(g, edges)
    }
}

/// Removed vertices and edges; an edge is dead when it or an endpoint is removed.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    vertex_off: Vec<bool>,
    edge_off: Vec<bool>,
}

impl Mask {
    pub fn new(g: &DiGraph) -> Self {
        Self { vertex_off: vec![false; g.n()], edge_off: vec![false; g.m()] }
    }

    /// Keeps only the listed edges.
    pub fn only_edges(g: &DiGraph, keep: &[EdgeId]) -> Self {
        let mut m = Self { vertex_off: vec![false; g.n()], edge_off: vec![true; g.m()] };
        for &e in keep {
            m.edge_off[e] = false;
        }
        m
    }

    pub fn remove_vertex(&mut self, g: &DiGraph, v: VertexId) {
        self.vertex_off[v] = true;
        for &e in g.out_edges(v).iter().chain(g.in_edges(v)) {
            self.edge_off[e] = true;
        }
    }

    pub fn remove_edge(&mut self, e: EdgeId) {
        self.edge_off[e] = true;
    }

    pub fn vertex_alive(&self, v: VertexId) -> bool {
        !self.vertex_off[v]
    }

    pub fn edge_alive(&self, e: EdgeId) -> bool {
        !self.edge_off[e]
    }

    /// Intersection of two masks.
    pub fn and(&self, other: &Mask) -> Mask {
        Mask {
            vertex_off: self.vertex_off.iter().zip(&other.vertex_off).map(|(a, b)| *a || *b).collect(),
            edge_off: self.edge_off.iter().zip(&other.edge_off).map(|(a, b)| *a || *b).collect(),
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// u=0, v=1, w=2 with edges u→v, v→w, u→w.
    pub fn triangle() -> DiGraph {
        DiGraph::from_pairs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    pub fn cycle(n: usize) -> DiGraph {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        DiGraph::from_pairs(n, &pairs).unwrap()
    }

    /// u=0, a=1, b=2, v=3: u→a, a→v, u→b, b→v, u→v.
    pub fn diamond() -> DiGraph {
        DiGraph::from_pairs(4, &[(0, 1), (1, 3), (0, 2), (2, 3), (0, 3)]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn rejects_self_loops_and_parallel_edges() {
        assert_eq!(DiGraph::from_pairs(2, &[(0, 0)]).unwrap_err(), GraphError::SelfLoop(0));
        assert_eq!(DiGraph::from_pairs(2, &[(0, 1), (0, 1)]).unwrap_err(), GraphError::ParallelEdge(0, 1));
        assert!(matches!(DiGraph::from_pairs(2, &[(0, 2)]), Err(GraphError::VertexOutOfRange(2))));
        let bad = DiGraph::new(2, vec![Edge { source: 0, target: 1, length: -1.0, cost: 1.0 }]);
        assert!(matches!(bad, Err(GraphError::InvalidLength(0, _))));
    }

    #[test]
    fn unit_flag_tracks_lengths() {
        assert!(triangle().is_unit_length());
        let g = DiGraph::new(2, vec![Edge { source: 0, target: 1, length: 2.0, cost: 1.0 }]).unwrap();
        assert!(!g.is_unit_length());
    }

    #[test]
    fn shortcut_removes_cycles() {
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 1), (1, 3)]).unwrap();
        let walk = vec![0, 1, 2, 3];
        let p = Path::shortcut(&g, &walk).unwrap();
        assert_eq!(p.vertices, vec![0, 1, 3]);
        assert!(p.is_simple());
    }

    #[test]
    fn vertex_mask_kills_incident_edges() {
        let g = diamond();
        let mut m = Mask::new(&g);
        m.remove_vertex(&g, 1);
        assert!(!m.edge_alive(0));
        assert!(!m.edge_alive(1));
        assert!(m.edge_alive(2));
    }
}
