//! Ground-truth checkers: spanner validity (plain and fault-tolerant) and
//! exhaustive oracles for tiny spanner, Min-Rep and set-cover instances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    count_fault_sets, enumerate_stretch_paths, fault_sets, shortest_distances_masked, DiGraph, EdgeId, FaultModel,
    FaultSet, Mask, VertexId, STRETCH_TOL,
};
use crate::instances::{MinRepInstance, SetCoverWitness};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("{what} has size {size}, above the brute-force limit {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error("fault budget r={r} gives {sets} fault sets, above the limit {limit}")]
    FaultBudgetTooLarge { r: usize, sets: u128, limit: usize },
    #[error("infeasible: {0}")]
    Infeasible(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub valid: bool,
    pub worst_edge: Option<(VertexId, VertexId)>,
    #[serde(rename = "stretch")]
    pub realized_stretch: f64,
    #[serde(rename = "failing_fault", skip_serializing_if = "Option::is_none", default)]
    pub failing_fault_set: Option<FaultSet>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Default cap on the number of fault sets `verify_ft` enumerates.
pub const MAX_FAULT_SETS: usize = 100_000;

fn stretch_of(dh: f64, dg: f64) -> f64 {
    if dg > 0.0 {
        dh / dg
    } else if dh <= 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

struct Worst {
    edge: Option<(VertexId, VertexId)>,
    stretch: f64,
}

/// Max stretch over surviving demands of `g \ fault` in `h \ fault`.
/// Sources are swept once each in both graphs.
fn scan(g: &DiGraph, in_h: &[bool], fault: Option<(&FaultModel, &[usize])>, k: f64, stop_early: bool) -> Worst {
    let base = match fault {
        Some((model, set)) => model.mask(g, set),
        None => Mask::new(g),
    };
    let mut h_mask = base.clone();
    for (e, &keep) in in_h.iter().enumerate() {
        if !keep {
            h_mask.remove_edge(e);
        }
    }
    let mut worst = Worst { edge: None, stretch: 1.0 };
    let mut first = true;
    for u in 0..g.n() {
        let demands: Vec<EdgeId> = g
            .out_edges(u)
            .iter()
            .copied()
            .filter(|&e| match fault {
                Some((model, set)) => model.demand_survives(g, e, set),
                None => true,
            })
            .collect();
        if demands.is_empty() {
            continue;
        }
        let dg = shortest_distances_masked(g, u, false, Some(&base));
        let dh = shortest_distances_masked(g, u, false, Some(&h_mask));
        for e in demands {
            let v = g.edge(e).target;
            let s = stretch_of(dh[v], dg[v]);
            if first || s > worst.stretch {
                worst = Worst { edge: Some((u, v)), stretch: s };
                first = false;
            }
            if stop_early && s > k + STRETCH_TOL {
                return worst;
            }
        }
    }
    worst
}

fn membership(g: &DiGraph, edge_set: &[EdgeId]) -> Vec<bool> {
    let mut in_h = vec![false; g.m()];
    for &e in edge_set {
        in_h[e] = true;
    }
    in_h
}

/// Checks `d_H(u,v) ≤ k·d_G(u,v)` for every edge `(u,v)` of `g`.
pub fn verify_spanner(g: &DiGraph, k: f64, edge_set: &[EdgeId]) -> VerifyReport {
    let w = scan(g, &membership(g, edge_set), None, k, false);
    VerifyReport { valid: w.stretch <= k + STRETCH_TOL, worst_edge: w.edge, realized_stretch: w.stretch, failing_fault_set: None }
}

pub fn verify_ft(g: &DiGraph, k: f64, edge_set: &[EdgeId], fault: &FaultModel) -> Result<VerifyReport, VerifyError> {
    verify_ft_with(g, k, edge_set, fault, MAX_FAULT_SETS)
}

/// Runs the plain check on `G \ F` against `H \ F` for every fault set, in
/// size-then-lexicographic order, stopping at the first failing `F`.
pub fn verify_ft_with(
    g: &DiGraph,
    k: f64,
    edge_set: &[EdgeId],
    fault: &FaultModel,
    max_sets: usize,
) -> Result<VerifyReport, VerifyError> {
    if fault.r == 0 {
        return Ok(verify_spanner(g, k, edge_set));
    }
    let sets = fault_sets(g, fault, max_sets).ok_or(VerifyError::FaultBudgetTooLarge {
        r: fault.r,
        sets: count_fault_sets(fault.universe(g), fault.r),
        limit: max_sets,
    })?;
    let in_h = membership(g, edge_set);
    let mut report = VerifyReport { valid: true, worst_edge: None, realized_stretch: 1.0, failing_fault_set: None };
    for set in sets {
        let w = scan(g, &in_h, Some((fault, &set)), k, true);
        if report.worst_edge.is_none() || w.stretch > report.realized_stretch {
            report.worst_edge = w.edge.or(report.worst_edge);
            report.realized_stretch = report.realized_stretch.max(w.stretch);
        }
        if w.stretch > k + STRETCH_TOL {
            report.valid = false;
            report.worst_edge = w.edge;
            report.realized_stretch = w.stretch;
            report.failing_fault_set = Some(set);
            break;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub cost: f64,
    pub size: usize,
    pub witness: Vec<EdgeId>,
}

#[derive(Clone, Debug)]
pub struct BruteForceOptions {
    /// Maximum number of choice units (edges, or groups when given).
    pub max_units: usize,
    /// Edges that must be taken together; defaults to one group per edge.
    pub groups: Option<Vec<Vec<EdgeId>>>,
    pub max_fault_sets: usize,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self { max_units: 14, groups: None, max_fault_sets: 10_000 }
    }
}

pub fn brute_force_opt(g: &DiGraph, k: f64, fault: Option<&FaultModel>) -> Result<BruteForceResult, VerifyError> {
    brute_force_opt_with(g, k, fault, &BruteForceOptions::default())
}

fn lex_less(a: &[EdgeId], b: &[EdgeId]) -> bool {
    a < b
}

/// Minimum-cost edge set passing `verify_spanner` (or `verify_ft`), ties
/// broken by the lexicographically smallest sorted edge list. Subsets that
/// miss a forced unit or already cost more than the incumbent are skipped.
pub fn brute_force_opt_with(
    g: &DiGraph,
    k: f64,
    fault: Option<&FaultModel>,
    opts: &BruteForceOptions,
) -> Result<BruteForceResult, VerifyError> {
    let groups: Vec<Vec<EdgeId>> = opts.groups.clone().unwrap_or_else(|| (0..g.m()).map(|e| vec![e]).collect());
    let units = groups.len();
    if units > opts.max_units || units >= 63 {
        return Err(VerifyError::TooLarge { what: "edge set", size: units, limit: opts.max_units });
    }
    let fault = fault.filter(|f| f.r > 0);
    let sets = match fault {
        Some(model) => Some(fault_sets(g, model, opts.max_fault_sets).ok_or(VerifyError::FaultBudgetTooLarge {
            r: model.r,
            sets: count_fault_sets(model.universe(g), model.r),
            limit: opts.max_fault_sets,
        })?),
        None => None,
    };
    let mut unit_of = vec![usize::MAX; g.m()];
    for (i, grp) in groups.iter().enumerate() {
        for &e in grp {
            unit_of[e] = i;
        }
    }
    // a demand whose only budget-respecting path is its own edge pins that edge
    let mut forced: u64 = 0;
    for (e, edge) in g.edges().iter().enumerate() {
        if let Ok(paths) = enumerate_stretch_paths(g, (edge.source, edge.target), k, 2) {
            if paths.len() == 1 && paths[0].edges == [e] && unit_of[e] != usize::MAX {
                forced |= 1 << unit_of[e];
            }
        }
    }
    let unit_cost: Vec<f64> = groups.iter().map(|grp| g.cost_of(grp)).collect();
    let mut best: Option<(f64, Vec<EdgeId>)> = None;
    let mut in_h = vec![false; g.m()];
    for subset in 0u64..(1u64 << units) {
        if subset & forced != forced {
            continue;
        }
        let cost: f64 = (0..units).filter(|i| subset >> i & 1 == 1).map(|i| unit_cost[i]).sum();
        if let Some((bc, _)) = &best {
            if cost > bc + 1e-9 {
                continue;
            }
        }
        in_h.iter_mut().for_each(|b| *b = false);
        let mut edges = Vec::new();
        for (i, grp) in groups.iter().enumerate() {
            if subset >> i & 1 == 1 {
                for &e in grp {
                    in_h[e] = true;
                    edges.push(e);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        if let Some((bc, bw)) = &best {
            if (cost - bc).abs() <= 1e-9 && !lex_less(&edges, bw) {
                continue;
            }
        }
        let ok = match (&sets, fault) {
            (Some(sets), Some(model)) => {
                sets.iter().all(|set| scan(g, &in_h, Some((model, set)), k, true).stretch <= k + STRETCH_TOL)
            }
            _ => scan(g, &in_h, None, k, true).stretch <= k + STRETCH_TOL,
        };
        if ok {
            let improves = match &best {
                None => true,
                Some((bc, bw)) => cost < bc - 1e-9 || lex_less(&edges, bw),
            };
            if improves {
                best = Some((cost, edges));
            }
        }
    }
    let (cost, witness) = best.expect("the full edge set is always a spanner");
    Ok(BruteForceResult { cost, size: witness.len(), witness })
}

/// Smallest vertex set covering every superedge, by exhaustive search.
pub fn brute_force_minrep(mr: &MinRepInstance) -> Result<usize, VerifyError> {
    let nv = mr.num_vertices();
    if nv > 20 {
        return Err(VerifyError::TooLarge { what: "Min-Rep vertex set", size: nv, limit: 20 });
    }
    let half = mr.half();
    let pair_masks: Vec<Vec<u32>> = (0..half * half)
        .map(|p| {
            let (i, j) = (p / half, p % half);
            mr.matching(i, j)
                .iter()
                .enumerate()
                .map(|(a, &b)| (1u32 << mr.u_vertex(i, a)) | (1u32 << mr.v_vertex(j, b)))
                .collect()
        })
        .collect();
    let mut best = nv;
    for subset in 0u32..(1u32 << nv) {
        let size = subset.count_ones() as usize;
        if size >= best {
            continue;
        }
        if pair_masks.iter().all(|edges| edges.iter().any(|&em| subset & em == em)) {
            best = size;
        }
    }
    Ok(best)
}

/// Minimum number of sets covering all `num_elements` elements.
pub fn brute_force_setcover(num_elements: usize, sets: &[Vec<usize>]) -> Result<usize, VerifyError> {
    if sets.len() > 20 {
        return Err(VerifyError::TooLarge { what: "set family", size: sets.len(), limit: 20 });
    }
    if num_elements > 128 {
        return Err(VerifyError::TooLarge { what: "ground set", size: num_elements, limit: 128 });
    }
    let full: u128 = if num_elements == 128 { u128::MAX } else { (1u128 << num_elements) - 1 };
    let masks: Vec<u128> = sets.iter().map(|s| s.iter().fold(0u128, |acc, &e| acc | (1u128 << e))).collect();
    let union = masks.iter().fold(0u128, |a, m| a | m);
    if union & full != full {
        let missing = (0..num_elements).find(|&e| union >> e & 1 == 0).unwrap_or(0);
        return Err(VerifyError::Infeasible(format!("element {missing} is in no set")));
    }
    let mut best = sets.len();
    for subset in 0u32..(1u32 << sets.len()) {
        let size = subset.count_ones() as usize;
        if size >= best {
            continue;
        }
        let cov = (0..sets.len()).filter(|i| subset >> i & 1 == 1).fold(0u128, |a, i| a | masks[i]);
        if cov & full == full {
            best = size;
        }
    }
    Ok(best)
}

/// For an integral 2-spanner of a set-cover gap instance, every auxiliary
/// vertex's selected set neighbours (plus sets reachable through a selected
/// element edge) must cover the ground set. Returns the first auxiliary
/// vertex whose neighbourhood does not.
pub fn check_setcover_neighbourhoods(g: &DiGraph, witness: &SetCoverWitness, edge_set: &[EdgeId]) -> Result<(), VertexId> {
    let in_h = membership(g, edge_set);
    let set_index = |v: VertexId| witness.set_vertices.iter().position(|&s| s == v);
    let el_index = |v: VertexId| witness.element_vertices.iter().position(|&s| s == v);
    for &xv in &witness.aux_vertices {
        let mut covered = vec![false; witness.num_elements];
        for &e in g.out_edges(xv) {
            if !in_h[e] {
                continue;
            }
            let w = g.edge(e).target;
            if let Some(s) = set_index(w) {
                for &el in &witness.sets[s] {
                    covered[el] = true;
                }
            } else if let Some(el) = el_index(w) {
                covered[el] = true;
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(xv);
        }
    }
    Ok(())
}
