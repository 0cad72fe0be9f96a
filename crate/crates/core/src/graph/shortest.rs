use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::{DiGraph, EdgeId, Mask, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Paths into the root.
    In,
    /// Paths out of the root.
    Out,
}

/// Distances from (or to) a root with one parent edge per reached vertex.
#[derive(Clone, Debug)]
pub struct ShortestPathTree {
    pub dist: Vec<f64>,
    pub parent: Vec<Option<EdgeId>>,
}

#[derive(PartialEq, PartialOrd)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Distances and settle order; `reversed` walks edges backwards.
fn sweep(g: &DiGraph, root: VertexId, reversed: bool, mask: Option<&Mask>) -> (Vec<f64>, Vec<usize>) {
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut order = vec![usize::MAX; n];
    if mask.is_some_and(|m| !m.vertex_alive(root)) {
        return (dist, order);
    }
    let alive = |e: EdgeId| mask.is_none_or(|m| m.edge_alive(e));
    let next = |e: EdgeId| if reversed { g.edge(e).source } else { g.edge(e).target };
    let adj = |v: VertexId| if reversed { g.in_edges(v) } else { g.out_edges(v) };
    dist[root] = 0.0;
    let mut settled = 0;
    if g.is_unit_length() {
        let mut queue = VecDeque::from([root]);
        order[root] = 0;
        settled = 1;
        while let Some(v) = queue.pop_front() {
            for &e in adj(v) {
                let w = next(e);
                if alive(e) && dist[w].is_infinite() {
                    dist[w] = dist[v] + 1.0;
                    order[w] = settled;
                    settled += 1;
                    queue.push_back(w);
                }
            }
        }
    } else {
        let mut heap = BinaryHeap::from([Reverse((Key(0.0), root))]);
        while let Some(Reverse((Key(d), v))) = heap.pop() {
            if order[v] != usize::MAX || d > dist[v] {
                continue;
            }
            order[v] = settled;
            settled += 1;
            for &e in adj(v) {
                let w = next(e);
                let nd = d + g.edge(e).length;
                if alive(e) && order[w] == usize::MAX && nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Reverse((Key(nd), w)));
                }
            }
        }
    }
    (dist, order)
}

/// Single-source distances; `reversed` gives distances to `source`.
pub fn shortest_distances(g: &DiGraph, source: VertexId, reversed: bool) -> Vec<f64> {
    sweep(g, source, reversed, None).0
}

pub fn shortest_distances_masked(g: &DiGraph, source: VertexId, reversed: bool, mask: Option<&Mask>) -> Vec<f64> {
    sweep(g, source, reversed, mask).0
}

/// Shortest-path tree. The parent of `w` is the tight edge from the
/// smallest-id neighbour settled before `w`.
pub fn shortest_path_tree(g: &DiGraph, root: VertexId, dir: Direction, mask: Option<&Mask>) -> ShortestPathTree {
    let reversed = dir == Direction::In;
    let (dist, order) = sweep(g, root, reversed, mask);
    let mut parent = vec![None; g.n()];
    for w in 0..g.n() {
        if w == root || dist[w].is_infinite() {
            continue;
        }
        // out-tree: edges (p, w); in-tree: edges (w, p)
        let cands = if reversed { g.out_edges(w) } else { g.in_edges(w) };
        for &e in cands {
            if mask.is_some_and(|m| !m.edge_alive(e)) {
                continue;
            }
            let p = if reversed { g.edge(e).target } else { g.edge(e).source };
            if order[p] < order[w] && dist[p] + g.edge(e).length == dist[w] {
                parent[w] = Some(e);
                break;
            }
        }
        debug_assert!(parent[w].is_some());
    }
    ShortestPathTree { dist, parent }
}

/// Edge set of the shortest-path arborescence at `root`, sorted by id.
pub fn arborescence(g: &DiGraph, root: VertexId, dir: Direction) -> Vec<EdgeId> {
    arborescence_masked(g, root, dir, None)
}

pub fn arborescence_masked(g: &DiGraph, root: VertexId, dir: Direction, mask: Option<&Mask>) -> Vec<EdgeId> {
    let tree = shortest_path_tree(g, root, dir, mask);
    let mut edges: Vec<EdgeId> = tree.parent.into_iter().flatten().collect();
    edges.sort_unstable();
    edges
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::Edge;
    use super::*;

    #[test]
    fn cycle_distances() {
        let g = cycle(3);
        assert_eq!(shortest_distances(&g, 0, false), vec![0.0, 1.0, 2.0]);
        assert_eq!(shortest_distances(&g, 0, true), vec![0.0, 2.0, 1.0]);
    }

    #[test]
    fn isolated_target_is_infinite() {
        let g = DiGraph::from_pairs(3, &[(0, 1)]).unwrap();
        assert!(shortest_distances(&g, 0, false)[2].is_infinite());
    }

    #[test]
    fn weighted_diamond() {
        let g = DiGraph::new(
            3,
            vec![
                Edge { source: 0, target: 1, length: 1.0, cost: 1.0 },
                Edge { source: 1, target: 2, length: 1.0, cost: 1.0 },
                Edge { source: 0, target: 2, length: 3.0, cost: 1.0 },
            ],
        )
        .unwrap();
        assert_eq!(shortest_distances(&g, 0, false)[2], 2.0);
    }

    #[test]
    fn triangle_out_tree_from_middle() {
        let g = triangle();
        assert_eq!(arborescence(&g, 1, Direction::Out), vec![1]);
    }

    #[test]
    fn sink_root_has_empty_out_tree() {
        let g = triangle();
        assert!(arborescence(&g, 2, Direction::Out).is_empty());
    }

    #[test]
    fn cycle_out_tree() {
        let g = cycle(3);
        assert_eq!(arborescence(&g, 0, Direction::Out), vec![0, 1]);
        assert_eq!(arborescence(&g, 0, Direction::In), vec![1, 2]);
    }

    #[test]
    fn zero_length_cycle_tree_is_acyclic() {
        let g = DiGraph::new(
            3,
            vec![
                Edge { source: 0, target: 1, length: 0.0, cost: 1.0 },
                Edge { source: 1, target: 2, length: 0.0, cost: 1.0 },
                Edge { source: 2, target: 1, length: 0.0, cost: 1.0 },
            ],
        )
        .unwrap();
        let t = shortest_path_tree(&g, 0, Direction::Out, None);
        assert_eq!(t.parent, vec![None, Some(0), Some(1)]);
    }
}
