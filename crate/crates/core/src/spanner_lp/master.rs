use std::collections::{HashMap, HashSet};

use crate::graph::{
    enumerate_stretch_paths, fault_sets, count_fault_sets, shortest_distances_masked, stretch_budget, DiGraph, EdgeId,
    FaultModel, FaultSet, GraphError, Mask, Path, VertexId,
};
use crate::lp::{solve_lp_with, Basis, LinearProgram, LpSolution, Sense, SolverOptions, VarStatus};
use crate::rsp::{rsp_exact_hop, rsp_exact_labels, rsp_fptas, RspQuery, RspResult};

use super::{DemandFlow, FractionalSolution, LpOptions, PathFlow, SolveMode, SpannerLpError};

/// One unit-flow requirement: a demand, optionally under a fault set.
struct Block {
    demand: (VertexId, VertexId),
    fault: Option<FaultSet>,
    mask: Option<Mask>,
    budget: f64,
    flow_row: usize,
    cap_rows: HashMap<EdgeId, usize>,
    cols: Vec<(usize, Path)>,
    seen: HashSet<Vec<EdgeId>>,
}

/// Capacity variables `x_e` come first; path columns follow in insertion
/// order. Rows only ever get appended, so the previous basis stays usable.
struct FlowMaster<'g> {
    g: &'g DiGraph,
    lp: LinearProgram,
    blocks: Vec<Block>,
}

impl<'g> FlowMaster<'g> {
    fn new(g: &'g DiGraph, k: f64, demands: Vec<((VertexId, VertexId), Option<FaultSet>, Option<Mask>)>) -> Self {
        let mut lp = LinearProgram::new();
        for e in g.edges() {
            lp.add_var(e.cost);
        }
        let blocks = demands
            .into_iter()
            .map(|(demand, fault, mask)| {
                let dist = shortest_distances_masked(g, demand.0, false, mask.as_ref())[demand.1];
                Block {
                    demand,
                    fault,
                    mask,
                    budget: stretch_budget(k, dist),
                    flow_row: lp.add_row(Vec::new(), Sense::Ge, 1.0),
                    cap_rows: HashMap::new(),
                    cols: Vec::new(),
                    seen: HashSet::new(),
                }
            })
            .collect();
        Self { g, lp, blocks }
    }

    /// One starting path per block: the direct edge when it is a stretch
    /// path, else a shortest path.
    fn seed_direct(&mut self) {
        for b in 0..self.blocks.len() {
            let block = &self.blocks[b];
            let (u, v) = block.demand;
            let e = self.g.find_edge(u, v).expect("demands are edges");
            let alive = block.mask.as_ref().is_none_or(|m| m.edge_alive(e));
            let path = if alive && self.g.edge(e).length <= block.budget {
                Path::from_edges(self.g, vec![e]).expect("single edge")
            } else {
                let zero = vec![0.0; self.g.m()];
                price(self.g, block, &zero, 0.0).expect("demand is reachable").path
            };
            self.add_path(b, path);
        }
    }

    /// Feasible starting basis: every block sends its unit along its first
    /// column and each edge on some seed path is bought once, fixed by the
    /// first such capacity row.
    fn crash_basis(&self) -> Basis {
        let mut vars = vec![VarStatus::AtLower; self.lp.num_vars()];
        let mut rows = vec![VarStatus::Basic; self.lp.num_rows()];
        let mut owned = vec![false; self.g.m()];
        for block in &self.blocks {
            let Some((col, path)) = block.cols.first() else { continue };
            vars[*col] = VarStatus::Basic;
            rows[block.flow_row] = VarStatus::AtUpper;
            for &e in &path.edges {
                if !owned[e] {
                    owned[e] = true;
                    vars[e] = VarStatus::Basic;
                    rows[block.cap_rows[&e]] = VarStatus::AtLower;
                }
            }
        }
        Basis { vars, rows }
    }

    fn add_path(&mut self, b: usize, path: Path) -> bool {
        let block = &mut self.blocks[b];
        if !block.seen.insert(path.edges.clone()) {
            return false;
        }
        let col = self.lp.add_var(0.0);
        self.lp.rows[block.flow_row].coeffs.push((col, 1.0));
        for &e in &path.edges {
            match block.cap_rows.get(&e) {
                Some(&row) => self.lp.rows[row].coeffs.push((col, 1.0)),
                None => {
                    let row = self.lp.add_row(vec![(col, 1.0), (e, -1.0)], Sense::Le, 0.0);
                    block.cap_rows.insert(e, row);
                }
            }
        }
        block.cols.push((col, path));
        true
    }

    fn solve(&self, warm: Option<&Basis>) -> Result<LpSolution, SpannerLpError> {
        let sol = solve_lp_with(&self.lp, &SolverOptions::default(), warm)?;
        if !sol.is_optimal() {
            return Err(SpannerLpError::MasterStatus(format!("{:?}", sol.status)));
        }
        Ok(sol)
    }

    /// Dual weights `y_e = -π(cap row)` of one block, zero on edges without a row.
    fn block_weights(&self, b: usize, duals: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.g.m()];
        for (&e, &row) in &self.blocks[b].cap_rows {
            w[e] = (-duals[row]).max(0.0);
        }
        w
    }

    /// Clamps the master solution and repairs it so that every flow invariant
    /// holds exactly: each block carries at least one unit and capacities
    /// cover every per-block load.
    fn extract(&self, sol: &LpSolution, mode: SolveMode, epsilon: f64, lower_bound: f64) -> FractionalSolution {
        let m = self.g.m();
        let mut x: Vec<f64> = (0..m).map(|e| sol.x[e].max(0.0)).collect();
        let mut flows = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let mut paths: Vec<PathFlow> = block
                .cols
                .iter()
                .filter_map(|(col, p)| {
                    let f = sol.x.get(*col).copied().unwrap_or(0.0);
                    (f > 1e-12).then(|| PathFlow { path: p.clone(), flow: f })
                })
                .collect();
            let total: f64 = paths.iter().map(|p| p.flow).sum();
            if total <= 0.0 {
                paths = vec![PathFlow { path: block.cols[0].1.clone(), flow: 1.0 }];
            } else if total < 1.0 {
                for p in &mut paths {
                    p.flow /= total;
                }
            }
            let flow = DemandFlow { demand: block.demand, fault: block.fault.clone(), paths };
            for (e, load) in flow.edge_load(m).into_iter().enumerate() {
                x[e] = x[e].max(load);
            }
            flows.push(flow);
        }
        let objective = self.g.edges().iter().zip(&x).map(|(e, v)| e.cost * v).sum();
        FractionalSolution { x, flows, objective, mode, epsilon, lower_bound: lower_bound.min(objective) }
    }
}

pub(super) fn check_stretch(k: f64) -> Result<(), SpannerLpError> {
    if k.is_nan() || k < 1.0 {
        return Err(GraphError::InvalidStretch(k).into());
    }
    Ok(())
}

fn edge_demands(g: &DiGraph) -> Vec<((VertexId, VertexId), Option<FaultSet>, Option<Mask>)> {
    g.edges().iter().map(|e| ((e.source, e.target), None, None)).collect()
}

/// Optimal relaxation by enumerating every stretch path of every demand.
pub fn solve_lp_exact(g: &DiGraph, k: f64, max_paths: usize) -> Result<FractionalSolution, SpannerLpError> {
    check_stretch(k)?;
    let mut master = FlowMaster::new(g, k, edge_demands(g));
    for b in 0..master.blocks.len() {
        let paths = enumerate_stretch_paths(g, master.blocks[b].demand, k, max_paths)?;
        if b == 0 {
            master.seed_direct();
        }
        for p in paths {
            master.add_path(b, p);
        }
    }
    if master.blocks.is_empty() {
        return Ok(master.extract(&empty_solution(g), SolveMode::Exact, 0.0, 0.0));
    }
    let sol = master.solve(Some(&master.crash_basis()))?;
    Ok(master.extract(&sol, SolveMode::Exact, 0.0, sol.dual_objective))
}

/// Exact relaxation where the edges of each group share one capacity, as
/// when an undirected edge is encoded by its two arcs.
pub fn solve_lp_exact_grouped(
    g: &DiGraph,
    k: f64,
    max_paths: usize,
    groups: &[Vec<EdgeId>],
) -> Result<FractionalSolution, SpannerLpError> {
    check_stretch(k)?;
    let mut master = FlowMaster::new(g, k, edge_demands(g));
    for grp in groups {
        if let Some(&e) = grp.iter().find(|&&e| e >= g.m()) {
            return Err(SpannerLpError::Malformed(format!("group edge {e} out of range")));
        }
        for w in grp.windows(2) {
            master.lp.add_row(vec![(w[0], 1.0), (w[1], -1.0)], Sense::Eq, 0.0);
        }
    }
    for b in 0..master.blocks.len() {
        for p in enumerate_stretch_paths(g, master.blocks[b].demand, k, max_paths)? {
            master.add_path(b, p);
        }
    }
    if master.blocks.is_empty() {
        return Ok(master.extract(&empty_solution(g), SolveMode::Exact, 0.0, 0.0));
    }
    let sol = master.solve(None)?;
    let mut out = master.extract(&sol, SolveMode::Exact, 0.0, sol.dual_objective);
    // extraction may lift single arcs; keep groups level
    for grp in groups {
        let top = grp.iter().map(|&e| out.x[e]).fold(0.0, f64::max);
        for &e in grp {
            out.x[e] = top;
        }
    }
    out.objective = out.cost(g);
    out.lower_bound = out.lower_bound.min(out.objective);
    Ok(out)
}

fn empty_solution(g: &DiGraph) -> LpSolution {
    LpSolution {
        status: crate::lp::LpStatus::Optimal,
        x: vec![0.0; g.m()],
        duals: Vec::new(),
        reduced_costs: vec![0.0; g.m()],
        objective: 0.0,
        dual_objective: 0.0,
        primal_residual: 0.0,
        cs_residual: 0.0,
        iterations: 0,
        basis: Basis::default(),
    }
}

pub fn solve_lp_colgen(g: &DiGraph, k: f64, epsilon: f64) -> Result<FractionalSolution, SpannerLpError> {
    solve_lp_colgen_with(g, k, epsilon, &LpOptions::default())
}

/// `(1+ε)`-approximate relaxation by column generation seeded with the
/// direct edges.
pub fn solve_lp_colgen_with(
    g: &DiGraph,
    k: f64,
    epsilon: f64,
    opts: &LpOptions,
) -> Result<FractionalSolution, SpannerLpError> {
    check_stretch(k)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SpannerLpError::InvalidEpsilon(epsilon));
    }
    let mut master = FlowMaster::new(g, k, edge_demands(g));
    master.seed_direct();
    run_colgen(&mut master, epsilon, opts)
}

pub fn solve_ft_lp(g: &DiGraph, k: f64, fault: FaultModel, epsilon: f64) -> Result<FractionalSolution, SpannerLpError> {
    solve_ft_lp_with(g, k, fault, epsilon, &LpOptions::default())
}

/// Fault-tolerant relaxation over every fault set of size at most `r`, with
/// shared capacities. `epsilon = 0` prices exactly and runs to optimality.
pub fn solve_ft_lp_with(
    g: &DiGraph,
    k: f64,
    fault: FaultModel,
    epsilon: f64,
    opts: &LpOptions,
) -> Result<FractionalSolution, SpannerLpError> {
    check_stretch(k)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(SpannerLpError::InvalidEpsilon(epsilon));
    }
    let demands = ft_blocks(g, fault, opts)?
        .into_iter()
        .map(|(e, tag, mask)| ((g.edge(e).source, g.edge(e).target), tag, Some(mask)))
        .collect();
    let mut master = FlowMaster::new(g, k, demands);
    master.seed_direct();
    run_colgen(&mut master, epsilon, opts)
}

/// One entry per fault set of size at most `r` and demand surviving it:
/// the demand edge, the fault set (absent when `r = 0`) and its mask.
pub(super) fn ft_blocks(
    g: &DiGraph,
    fault: FaultModel,
    opts: &LpOptions,
) -> Result<Vec<(EdgeId, Option<FaultSet>, Mask)>, SpannerLpError> {
    if !g.is_unit_length() {
        return Err(SpannerLpError::NotUnitLength);
    }
    let too_large = || SpannerLpError::FaultBudgetTooLarge {
        r: fault.r,
        r_max: opts.r_max,
        sets: count_fault_sets(fault.universe(g), fault.r),
        limit: opts.max_fault_sets,
    };
    if fault.r > opts.r_max {
        return Err(too_large());
    }
    let sets = fault_sets(g, &fault, opts.max_fault_sets).ok_or_else(too_large)?;
    let mut blocks = Vec::new();
    for set in sets {
        let mask = fault.mask(g, &set);
        for e in 0..g.m() {
            if fault.demand_survives(g, e, &set) {
                blocks.push((e, (fault.r > 0).then(|| set.clone()), mask.clone()));
            }
        }
    }
    Ok(blocks)
}

fn price(g: &DiGraph, block: &Block, weights: &[f64], eps: f64) -> Option<RspResult> {
    let q = RspQuery {
        graph: g,
        source: block.demand.0,
        target: block.demand.1,
        budget: block.budget,
        weights,
        forbidden: block.mask.as_ref(),
        epsilon: eps,
    };
    if g.is_unit_length() {
        rsp_exact_hop(&q)
    } else if eps > 0.0 {
        rsp_fptas(&q).ok()
    } else {
        rsp_exact_labels(&q)
    }
}

/// Prices every block against the master duals. The lower bound follows from
/// the dual: `z_d` capped at each demand's cheapest path weight is feasible,
/// since the capacity columns already price out.
fn run_colgen(master: &mut FlowMaster, epsilon: f64, opts: &LpOptions) -> Result<FractionalSolution, SpannerLpError> {
    let g = master.g;
    if master.blocks.is_empty() {
        return Ok(master.extract(&empty_solution(g), SolveMode::Colgen, epsilon, 0.0));
    }
    let eps = epsilon.min(1.0);
    let eps_price = if g.is_unit_length() { 0.0 } else { eps / 3.0 };
    let eps_stop = eps / 3.0;
    let limit = opts.rounds_per_block.saturating_mul(master.blocks.len()).max(1);
    let mut warm: Option<Basis> = Some(master.crash_basis());
    let mut last: Option<(LpSolution, f64)> = None;
    for _ in 0..limit {
        let sol = master.solve(warm.as_ref())?;
        let mut lower = 0.0;
        let mut improving: Vec<(usize, Path)> = Vec::new();
        for b in 0..master.blocks.len() {
            let block = &master.blocks[b];
            let z = sol.duals[block.flow_row].max(0.0);
            let w = master.block_weights(b, &sol.duals);
            match price(g, block, &w, eps_price) {
                Some(r) => {
                    lower += z.min(r.weight / (1.0 + eps_price));
                    if r.weight < z * (1.0 - 1e-9) - 1e-12 {
                        improving.push((b, r.path));
                    }
                }
                None => lower += z,
            }
        }
        let obj = sol.objective;
        if improving.is_empty() || obj <= (1.0 + eps_stop) * lower + 1e-9 * (1.0 + obj.abs()) {
            return Ok(master.extract(&sol, SolveMode::Colgen, epsilon, lower));
        }
        let mut added = 0;
        for (b, p) in improving {
            added += usize::from(master.add_path(b, p));
        }
        if added == 0 {
            return Ok(master.extract(&sol, SolveMode::Colgen, epsilon, lower));
        }
        warm = Some(sol.basis.clone());
        last = Some((sol, lower));
    }
    let (sol, lower) = last.expect("at least one round ran");
    let best = master.extract(&sol, SolveMode::Colgen, epsilon, lower);
    Err(SpannerLpError::IterationLimit {
        limit,
        objective: best.objective,
        lower_bound: lower,
        best: Box::new(best),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DiGraph, Edge, FaultKind};

    fn triangle() -> DiGraph {
        DiGraph::from_pairs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn diamond() -> DiGraph {
        DiGraph::from_pairs(4, &[(0, 1), (1, 3), (0, 2), (2, 3), (0, 3)]).unwrap()
    }

    #[test]
    fn triangle_routes_long_demand() {
        let sol = solve_lp_exact(&triangle(), 2.0, 100).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
        assert!(sol.x[2].abs() < 1e-9);
        assert!((sol.lower_bound - 2.0).abs() < 1e-6);
        sol.check_decomposition(&triangle(), 2.0, None).unwrap();
    }

    #[test]
    fn grouped_arcs_share_capacity() {
        // path a-b-c plus chord a-c, each undirected edge as two arcs
        let pairs = [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)];
        let g = DiGraph::from_pairs(3, &pairs).unwrap();
        let groups = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        let free = solve_lp_exact(&g, 2.0, 100).unwrap();
        let tied = solve_lp_exact_grouped(&g, 2.0, 100, &groups).unwrap();
        assert!(tied.objective >= free.objective - 1e-9);
        for grp in &groups {
            assert_eq!(tied.x[grp[0]], tied.x[grp[1]]);
        }
        assert!((tied.objective - 3.0).abs() < 1e-7);
    }

    #[test]
    fn cycle_needs_every_edge() {
        let g = DiGraph::from_pairs(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let sol = solve_lp_exact(&g, 1.0, 10).unwrap();
        assert!((sol.objective - 5.0).abs() < 1e-9);
        assert!(sol.x.iter().all(|&v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn single_edge() {
        let g = DiGraph::from_pairs(2, &[(0, 1)]).unwrap();
        assert!((solve_lp_exact(&g, 5.0, 10).unwrap().objective - 1.0).abs() < 1e-12);
        assert!((solve_lp_colgen(&g, 5.0, 0.1).unwrap().objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overflow_propagates() {
        let err = solve_lp_exact(&diamond(), 2.0, 2).unwrap_err();
        assert!(matches!(err, SpannerLpError::Graph(GraphError::PathOverflow(2))));
    }

    #[test]
    fn colgen_on_triangle() {
        let sol = solve_lp_colgen(&triangle(), 2.0, 0.01).unwrap();
        assert!(sol.objective <= 2.02);
        assert_eq!(sol.mode, SolveMode::Colgen);
        sol.check_decomposition(&triangle(), 2.0, None).unwrap();
    }

    #[test]
    fn colgen_on_shortest_path_dag_keeps_all_edges() {
        // every alternative route is longer than the stretch allows
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let sol = solve_lp_colgen(&g, 2.0, 0.01).unwrap();
        assert!((sol.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn colgen_weighted_uses_fptas_pricing() {
        let g = DiGraph::new(
            3,
            vec![
                Edge { source: 0, target: 1, length: 1.0, cost: 1.0 },
                Edge { source: 1, target: 2, length: 1.0, cost: 1.0 },
                Edge { source: 0, target: 2, length: 1.5, cost: 3.0 },
            ],
        )
        .unwrap();
        let exact = solve_lp_exact(&g, 2.0, 100).unwrap();
        let approx = solve_lp_colgen(&g, 2.0, 0.05).unwrap();
        assert!((exact.objective - 2.0).abs() < 1e-9);
        assert!(approx.objective <= 1.05 * exact.objective + 1e-9);
    }

    #[test]
    fn ft_r0_matches_exact() {
        let g = diamond();
        let ft = solve_ft_lp(&g, 2.0, FaultModel::new(FaultKind::Vertex, 0), 0.0).unwrap();
        let exact = solve_lp_exact(&g, 2.0, 100).unwrap();
        assert!((ft.objective - exact.objective).abs() < 1e-6);
        assert!(ft.flows.iter().all(|f| f.fault.is_none()));
    }

    #[test]
    fn ft_diamond_vertex_faults() {
        let g = diamond();
        let sol = solve_ft_lp(&g, 2.0, FaultModel::new(FaultKind::Vertex, 1), 0.0).unwrap();
        // faulting a leaves only u-b-v for (u,v), and vice versa, while
        // the four side edges are their own only routes
        for e in 0..4 {
            assert!(sol.x[e] >= 1.0 - 1e-9);
        }
        assert!(sol.objective >= 4.0 - 1e-9);
        sol.check_decomposition(&g, 2.0, Some(&FaultModel::new(FaultKind::Vertex, 1))).unwrap();
    }

    #[test]
    fn ft_single_edge_under_edge_faults() {
        let g = DiGraph::from_pairs(2, &[(0, 1)]).unwrap();
        let sol = solve_ft_lp(&g, 2.0, FaultModel::new(FaultKind::Edge, 1), 0.1).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ft_guards() {
        let g = diamond();
        let big = solve_ft_lp(&g, 2.0, FaultModel::new(FaultKind::Vertex, 3), 0.1);
        assert!(matches!(big, Err(SpannerLpError::FaultBudgetTooLarge { .. })));
        let w = DiGraph::new(2, vec![Edge { source: 0, target: 1, length: 2.0, cost: 1.0 }]).unwrap();
        assert!(matches!(
            solve_ft_lp(&w, 2.0, FaultModel::new(FaultKind::Edge, 1), 0.1),
            Err(SpannerLpError::NotUnitLength)
        ));
    }
}
