use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DiGraph, EdgeId, Mask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultKind {
    Vertex,
    Edge,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::Vertex => "vertex",
            FaultKind::Edge => "edge",
        })
    }
}

impl FromStr for FaultKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vertex" => Ok(FaultKind::Vertex),
            "edge" => Ok(FaultKind::Edge),
            other => Err(format!("unknown fault kind `{other}` (expected vertex or edge)")),
        }
    }
}

/// Fault kind and budget `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultModel {
    pub kind: FaultKind,
    pub r: usize,
}

/// Sorted vertex or edge ids, depending on the fault kind.
pub type FaultSet = Vec<usize>;

impl FaultModel {
    pub fn new(kind: FaultKind, r: usize) -> Self {
        Self { kind, r }
    }

    pub fn universe(&self, g: &DiGraph) -> usize {
        match self.kind {
            FaultKind::Vertex => g.n(),
            FaultKind::Edge => g.m(),
        }
    }

    pub fn mask(&self, g: &DiGraph, set: &[usize]) -> Mask {
        let mut m = Mask::new(g);
        for &f in set {
            match self.kind {
                FaultKind::Vertex => m.remove_vertex(g, f),
                FaultKind::Edge => m.remove_edge(f),
            }
        }
        m
    }

    /// Whether demand `e` is still required once `set` has failed.
    pub fn demand_survives(&self, g: &DiGraph, e: EdgeId, set: &[usize]) -> bool {
        match self.kind {
            FaultKind::Vertex => {
                let edge = g.edge(e);
                !set.contains(&edge.source) && !set.contains(&edge.target)
            }
            FaultKind::Edge => !set.contains(&e),
        }
    }
}

/// Number of subsets of size at most `r`, saturating.
pub fn count_fault_sets(universe: usize, r: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for i in 0..=r.min(universe) {
        if i > 0 {
            binom = binom.saturating_mul((universe - i + 1) as u128) / i as u128;
        }
        total = total.saturating_add(binom);
    }
    total
}

/// All fault sets of size ≤ r, by size then lexicographically, or `None` when
/// there are more than `limit`.
pub fn fault_sets(g: &DiGraph, model: &FaultModel, limit: usize) -> Option<Vec<FaultSet>> {
    let u = model.universe(g);
    if count_fault_sets(u, model.r) > limit as u128 {
        return None;
    }
    let mut out = vec![Vec::new()];
    for size in 1..=model.r.min(u) {
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            out.push(comb.clone());
            let mut i = size;
            while i > 0 && comb[i - 1] == u - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            comb[i - 1] += 1;
            for j in i..size {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn counts_match_enumeration() {
        let g = diamond();
        for r in 0..4 {
            let m = FaultModel::new(FaultKind::Vertex, r);
            let sets = fault_sets(&g, &m, 1000).unwrap();
            assert_eq!(sets.len() as u128, count_fault_sets(4, r));
        }
        assert_eq!(count_fault_sets(5, 2), 1 + 5 + 10);
    }

    #[test]
    fn ordering_is_by_size_then_lex() {
        let g = triangle();
        let sets = fault_sets(&g, &FaultModel::new(FaultKind::Edge, 2), 100).unwrap();
        assert_eq!(sets, vec![vec![], vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn limit_is_enforced() {
        let g = triangle();
        assert!(fault_sets(&g, &FaultModel::new(FaultKind::Edge, 2), 6).is_none());
    }

    #[test]
    fn survival_rules() {
        let g = diamond();
        let vm = FaultModel::new(FaultKind::Vertex, 1);
        assert!(!vm.demand_survives(&g, 0, &[1]));
        assert!(vm.demand_survives(&g, 4, &[1]));
        let em = FaultModel::new(FaultKind::Edge, 1);
        assert!(!em.demand_survives(&g, 4, &[4]));
    }
}
