use std::collections::{HashMap, HashSet};

use crate::graph::{
    bottleneck_capacity, fault_sets, hop_bound, shortest_distances_masked, stretch_budget, DiGraph, EdgeId, FaultKind,
    FaultModel, FaultSet, Mask, Path, VertexId,
};
use crate::lp::{solve_lp_with, Basis, LinearProgram, Sense, SolverOptions};
use crate::rsp::{rsp_exact_hop, rsp_exact_labels, RspQuery, RspResult};

use super::{SpannerLpError, CUT_TOL};

const SEPARATION_TOL: f64 = 1e-9;
const MAX_CUT_ROUNDS: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    Feasible,
    Violated {
        demand: (VertexId, VertexId),
        fault: Option<FaultSet>,
        /// Per-edge cut values; every stretch path has `Σ y_e ≥ 1`.
        cut: Vec<f64>,
        /// `Σ x_e y_e`, the most flow the demand can carry.
        value: f64,
    },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

fn cheapest_path(g: &DiGraph, demand: (VertexId, VertexId), budget: f64, w: &[f64], mask: Option<&Mask>) -> Option<RspResult> {
    let q = RspQuery { graph: g, source: demand.0, target: demand.1, budget, weights: w, forbidden: mask, epsilon: 0.0 };
    if g.is_unit_length() {
        rsp_exact_hop(&q)
    } else {
        rsp_exact_labels(&q)
    }
}

/// Minimum fractional cut of the stretch paths of one demand under
/// capacities `x`, by lazily adding the path constraints the oracle finds.
/// Equals the maximum flow the demand can route. Returns `(value, y)`.
pub fn min_fractional_cut(
    g: &DiGraph,
    k: f64,
    x: &[f64],
    demand: (VertexId, VertexId),
    mask: Option<&Mask>,
) -> Result<(f64, Vec<f64>), SpannerLpError> {
    separate(g, k, x, demand, mask, &mut CutPool::default(), f64::INFINITY).map(|s| (s.value, s.y))
}

/// A cut together with the flow certifying its value.
pub(crate) struct Separation {
    pub value: f64,
    pub y: Vec<f64>,
    /// Weight of the lightest stretch path under `y`; at least `1 - 1e-9`.
    pub min_path: f64,
    /// Flow on each path of the pool, in pool order; loads respect `x` and
    /// sum to `value`.
    pub flows: Vec<f64>,
}

/// Path-constrained cut LP of one demand, kept between calls so later
/// separations start from the previous optimal basis.
#[derive(Default)]
pub(crate) struct CutPool {
    pub paths: Vec<Path>,
    lp: LinearProgram,
    var_of: HashMap<EdgeId, usize>,
    edge_of: Vec<EdgeId>,
    seen: HashSet<Vec<EdgeId>>,
    basis: Option<Basis>,
    /// Path flows of the last separation.
    flow: Vec<f64>,
}

impl CutPool {
    /// Flow the last routing still carries under `x` once scaled to fit.
    pub fn reroute(&self, x: &[f64]) -> f64 {
        let mut load: HashMap<EdgeId, f64> = HashMap::new();
        let mut total = 0.0;
        for (p, &f) in self.paths.iter().zip(&self.flow) {
            if f > 0.0 {
                total += f;
                for &e in &p.edges {
                    *load.entry(e).or_insert(0.0) += f;
                }
            }
        }
        let scale = load.iter().map(|(&e, &l)| x[e] / l).fold(f64::INFINITY, f64::min);
        if total > 0.0 { total * scale } else { 0.0 }
    }

    fn push(&mut self, path: Path) {
        let coeffs = path
            .edges
            .iter()
            .map(|&e| {
                let var = *self.var_of.entry(e).or_insert_with(|| {
                    self.edge_of.push(e);
                    self.lp.add_var(0.0)
                });
                (var, 1.0)
            })
            .collect();
        self.lp.add_row(coeffs, Sense::Ge, 1.0);
        self.seen.insert(path.edges.clone());
        self.paths.push(path);
    }
}

/// Minimum cut starting from the stretch paths in `pool`, which gains every
/// path the oracle adds. Once the pool alone routes `enough`, returns that
/// flow without certifying the cut (`min_path` is then zero).
pub(crate) fn separate(
    g: &DiGraph,
    k: f64,
    x: &[f64],
    demand: (VertexId, VertexId),
    mask: Option<&Mask>,
    pool: &mut CutPool,
    enough: f64,
) -> Result<Separation, SpannerLpError> {
    let m = g.m();
    let dist = shortest_distances_masked(g, demand.0, false, mask)[demand.1];
    if dist.is_infinite() {
        return Ok(Separation { value: 0.0, y: vec![0.0; m], min_path: f64::INFINITY, flows: Vec::new() });
    }
    let budget = stretch_budget(k, dist);
    let mut y = vec![0.0; m];
    if pool.paths.is_empty() {
        let first = cheapest_path(g, demand, budget, &y, mask).expect("reachable demand has a path").path;
        pool.push(first);
    }
    for (var, &e) in pool.edge_of.iter().enumerate() {
        pool.lp.objective[var] = x[e].max(0.0);
    }
    let mut value = 0.0;
    let mut min_path = 0.0;
    let mut duals = Vec::new();
    for _ in 0..MAX_CUT_ROUNDS {
        let sol = solve_lp_with(&pool.lp, &SolverOptions { perturb: false, ..SolverOptions::default() }, pool.basis.as_ref())?;
        if !sol.is_optimal() {
            return Err(SpannerLpError::MasterStatus(format!("cut LP {:?}", sol.status)));
        }
        value = sol.objective;
        y.iter_mut().for_each(|v| *v = 0.0);
        for (var, &e) in pool.edge_of.iter().enumerate() {
            y[e] = sol.x[var].max(0.0);
        }
        duals = sol.duals;
        pool.basis = Some(sol.basis);
        if value >= enough {
            min_path = 0.0;
            break;
        }
        match cheapest_path(g, demand, budget, &y, mask) {
            Some(r) => {
                min_path = r.weight;
                if r.weight >= 1.0 - SEPARATION_TOL || pool.seen.contains(&r.path.edges) {
                    break;
                }
                pool.push(r.path);
                for (var, &e) in pool.edge_of.iter().enumerate() {
                    pool.lp.objective[var] = x[e].max(0.0);
                }
            }
            None => break,
        }
    }
    let flows: Vec<f64> = duals.iter().map(|&f| f.max(0.0)).collect();
    pool.flow = flows.clone();
    Ok(Separation { value, y, min_path, flows })
}

fn check_demand(
    g: &DiGraph,
    k: f64,
    x: &[f64],
    e: EdgeId,
    mask: Option<&Mask>,
    fault: Option<&FaultSet>,
) -> Result<Option<Feasibility>, SpannerLpError> {
    let demand = (g.edge(e).source, g.edge(e).target);
    // one route whose edges all have capacity one carries the whole unit
    if x[e] >= 1.0 || bottleneck_capacity(g, demand, k, x, mask) >= 1.0 {
        return Ok(None);
    }
    let (value, cut) = min_fractional_cut(g, k, x, demand, mask)?;
    Ok((value < 1.0 - CUT_TOL).then(|| Feasibility::Violated { demand, fault: fault.cloned(), cut, value }))
}

/// Whether capacities `x` route one unit for every demand; otherwise the
/// first violated demand in edge order with its cut.
pub fn check_fractional_feasibility(g: &DiGraph, k: f64, x: &[f64]) -> Result<Feasibility, SpannerLpError> {
    for e in 0..g.m() {
        if let Some(v) = check_demand(g, k, x, e, None, None)? {
            return Ok(v);
        }
    }
    Ok(Feasibility::Feasible)
}

/// Feasibility for every fault set of size at most `r`, demands restricted
/// to survivors and distances taken in the faulted graph.
pub fn check_ft_feasibility(
    g: &DiGraph,
    k: f64,
    x: &[f64],
    fault: &FaultModel,
    max_sets: usize,
) -> Result<Feasibility, SpannerLpError> {
    let sets = fault_sets(g, fault, max_sets).ok_or(SpannerLpError::FaultBudgetTooLarge {
        r: fault.r,
        r_max: fault.r,
        sets: crate::graph::count_fault_sets(fault.universe(g), fault.r),
        limit: max_sets,
    })?;
    for set in &sets {
        let mask = fault.mask(g, set);
        for e in 0..g.m() {
            if fault.demand_survives(g, e, set) {
                if let Some(v) = check_demand(g, k, x, e, Some(&mask), Some(set))? {
                    return Ok(v);
                }
            }
        }
    }
    Ok(Feasibility::Feasible)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterdictionSolution {
    pub demand: (VertexId, VertexId),
    pub kind: FaultKind,
    /// Rounded fault set.
    pub faults: FaultSet,
    /// Rounded cut `y' = (1+ε)/ε · y`.
    pub y: Vec<f64>,
    /// Fractional fault indicators of the relaxation.
    pub z: Vec<f64>,
    /// Optimum of the relaxation, `Σ x_e y_e`.
    pub lp_value: f64,
    /// `Σ x_e y'_e`.
    pub cut_value: f64,
    pub fault_budget_used: usize,
}

/// Bicriteria interdiction for one demand: relax the choice of up to `r`
/// faults plus a fractional cut of the surviving stretch paths, then keep
/// every element with `z ≥ 1/((1+ε)h)` as a fault and scale the cut by
/// `(1+ε)/ε`, where `h` bounds the hops of a stretch path (`k` for edge
/// demands). Uses at most `(1+ε)h·r` faults.
pub fn interdiction_oracle(
    g: &DiGraph,
    k: f64,
    x: &[f64],
    demand: (VertexId, VertexId),
    fault: FaultModel,
    epsilon: f64,
) -> Result<InterdictionSolution, SpannerLpError> {
    if !g.is_unit_length() {
        return Err(SpannerLpError::NotUnitLength);
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SpannerLpError::InvalidEpsilon(epsilon));
    }
    let (u, v) = demand;
    let m = g.m();
    let universe = fault.universe(g);
    let dist = shortest_distances_masked(g, u, false, None)[v];
    if dist.is_infinite() {
        return Ok(InterdictionSolution {
            demand,
            kind: fault.kind,
            faults: Vec::new(),
            y: vec![0.0; m],
            z: vec![0.0; universe],
            lp_value: 0.0,
            cut_value: 0.0,
            fault_budget_used: 0,
        });
    }
    let budget = stretch_budget(k, dist);
    let hops = hop_bound(budget).min(g.n().saturating_sub(1)).max(1);

    let mut lp = LinearProgram::new();
    for e in 0..m {
        lp.add_var(x[e].max(0.0));
    }
    let direct = g.find_edge(u, v);
    let z0 = lp.num_vars();
    for i in 0..universe {
        let pinned = match fault.kind {
            FaultKind::Vertex => i == u || i == v,
            FaultKind::Edge => Some(i) == direct,
        };
        lp.add_bounded_var(0.0, 0.0, if pinned { 0.0 } else { 1.0 });
    }
    lp.add_row((0..universe).map(|i| (z0 + i, 1.0)).collect(), Sense::Le, fault.r as f64);

    let mut y = vec![0.0; m];
    let mut z = vec![0.0; universe];
    let combined = |y: &[f64], z: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|e| match fault.kind {
                FaultKind::Vertex => y[e] + 0.5 * (z[g.edge(e).source] + z[g.edge(e).target]),
                FaultKind::Edge => y[e] + z[e],
            })
            .collect()
    };
    let mut seen: HashSet<Vec<EdgeId>> = HashSet::new();
    let mut path = cheapest_path(g, demand, budget, &vec![0.0; m], None).expect("reachable demand").path;
    let mut warm: Option<Basis> = None;
    let mut lp_value = 0.0;
    for _ in 0..MAX_CUT_ROUNDS {
        if !seen.insert(path.edges.clone()) {
            break;
        }
        let mut coeffs: HashMap<usize, f64> = HashMap::new();
        for &e in &path.edges {
            *coeffs.entry(e).or_default() += 1.0;
            match fault.kind {
                FaultKind::Vertex => {
                    *coeffs.entry(z0 + g.edge(e).source).or_default() += 0.5;
                    *coeffs.entry(z0 + g.edge(e).target).or_default() += 0.5;
                }
                FaultKind::Edge => *coeffs.entry(z0 + e).or_default() += 1.0,
            }
        }
        let mut row: Vec<(usize, f64)> = coeffs.into_iter().collect();
        row.sort_by_key(|&(j, _)| j);
        lp.add_row(row, Sense::Ge, 1.0);
        let sol = solve_lp_with(&lp, &SolverOptions::default(), warm.as_ref())?;
        if !sol.is_optimal() {
            return Err(SpannerLpError::MasterStatus(format!("interdiction LP {:?}", sol.status)));
        }
        lp_value = sol.objective;
        for e in 0..m {
            y[e] = sol.x[e].max(0.0);
        }
        for i in 0..universe {
            z[i] = sol.x[z0 + i].clamp(0.0, 1.0);
        }
        warm = Some(sol.basis);
        let w = combined(&y, &z);
        match cheapest_path(g, demand, budget, &w, None) {
            Some(r) if r.weight < 1.0 - SEPARATION_TOL => path = r.path,
            _ => break,
        }
    }
    let threshold = fault_threshold(hops, epsilon);
    let faults: FaultSet = (0..universe).filter(|&i| z[i] >= threshold).collect();
    let scale = (1.0 + epsilon) / epsilon;
    let y_round: Vec<f64> = y.iter().map(|v| v * scale).collect();
    let cut_value = (0..m).map(|e| x[e].max(0.0) * y_round[e]).sum();
    Ok(InterdictionSolution {
        demand,
        kind: fault.kind,
        fault_budget_used: faults.len(),
        faults,
        y: y_round,
        z,
        lp_value,
        cut_value,
    })
}

/// Threshold rule of the interdiction rounding, exposed for inspection.
pub fn fault_threshold(k_hops: usize, epsilon: f64) -> f64 {
    1.0 / ((1.0 + epsilon) * k_hops as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_stretch_paths_masked, DiGraph};
    use crate::spanner_lp::solve_lp_exact;

    fn triangle() -> DiGraph {
        DiGraph::from_pairs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn exact_capacities_are_feasible() {
        let g = triangle();
        let sol = solve_lp_exact(&g, 2.0, 100).unwrap();
        assert!(check_fractional_feasibility(&g, 2.0, &sol.x).unwrap().is_feasible());
        assert!(check_fractional_feasibility(&g, 1.0, &[1.0; 3]).unwrap().is_feasible());
    }

    #[test]
    fn missing_capacity_is_reported_with_cut() {
        let g = triangle();
        match check_fractional_feasibility(&g, 2.0, &[1.0, 0.0, 1.0]).unwrap() {
            Feasibility::Violated { demand, cut, value, .. } => {
                assert_eq!(demand, (1, 2));
                assert!((cut[1] - 1.0).abs() < 1e-9);
                assert!(value.abs() < 1e-12);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn split_capacity_cut_value() {
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 3), (0, 2), (2, 3), (0, 3)]).unwrap();
        let x = [0.3, 0.3, 0.3, 0.3, 0.3];
        let (value, _) = min_fractional_cut(&g, 2.0, &x, (0, 3), None).unwrap();
        assert!((value - 0.9).abs() < 1e-9);
    }

    #[test]
    fn threshold_rule() {
        assert!(0.1 < fault_threshold(3, 1.0));
        assert!((fault_threshold(3, 1.0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn interdiction_on_diamond() {
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]).unwrap();
        let x = [1.0; 4];
        let sol = interdiction_oracle(&g, 2.0, &x, (0, 3), FaultModel::new(FaultKind::Vertex, 1), 1.0).unwrap();
        // best: fault one middle vertex and cut the other route once
        assert!((sol.lp_value - 1.0).abs() < 1e-9);
        assert!(sol.faults.len() <= 4);
        assert!(sol.cut_value <= 2.0 + 1e-9);
        let mask = FaultModel::new(FaultKind::Vertex, 1).mask(&g, &sol.faults);
        if mask.vertex_alive(0) && mask.vertex_alive(3) {
            for p in enumerate_stretch_paths_masked(&g, (0, 3), 2.0, 100, Some(&mask)).unwrap_or_default() {
                let s: f64 = p.edges.iter().map(|&e| sol.y[e]).sum();
                assert!(s >= 1.0 - 1e-9);
            }
        }
    }
}
