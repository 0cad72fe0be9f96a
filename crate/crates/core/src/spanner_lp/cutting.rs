//! Cutting planes on the capacity vector. The master is the packing dual
//! `max Σ λ_c` subject to `Σ_c λ_c y_c ≤ c`, one column per fractional cut
//! `y_c`; its row duals are the capacities `x`. Separation is the per-demand
//! minimum cut, whose flow side yields the path decomposition at the end.

use crate::graph::{
    bottleneck_capacity, shortest_distances_masked, stretch_budget, DiGraph, EdgeId, FaultModel, FaultSet, Mask,
    VertexId,
};
use crate::rsp::{rsp_exact_hop, rsp_exact_labels, RspQuery};
use crate::lp::{solve_lp_with, Basis, LinearProgram, Sense, SolverOptions};

use super::cut::{separate, CutPool};
use super::master::{check_stretch, ft_blocks};
use super::{DemandFlow, FractionalSolution, LpOptions, PathFlow, SolveMode, SpannerLpError};

const MAX_ROUNDS: usize = 10_000;
/// Cuts whose violation is below this are not added.
const ADD_TOL: f64 = 1e-9;
/// Weight of the feasible center in the separation point.
const ALPHA: f64 = 0.5;

/// A demand edge that must route one unit, possibly inside `G \ F`.
struct Block {
    edge: EdgeId,
    demand: (VertexId, VertexId),
    fault: Option<FaultSet>,
    mask: Option<Mask>,
}

/// Relaxation by cutting planes, stabilized by separating between the
/// master point and the cheapest feasible capacities seen so far. Stops once
/// that feasible cost is within `1+ε` of the master bound (`1e-9` relative
/// when `ε = 0`), and reports itself as exact only in that case.
pub fn solve_lp_cutting(g: &DiGraph, k: f64, epsilon: f64) -> Result<FractionalSolution, SpannerLpError> {
    check_stretch(k)?;
    let blocks = g
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| Block { edge: e, demand: (edge.source, edge.target), fault: None, mask: None })
        .collect();
    solve(g, k, epsilon, blocks, greedy_spanner(g, k))
}

/// Fault-tolerant relaxation by cutting planes: one block per fault set of
/// size at most `r` and demand surviving it.
pub fn solve_ft_lp_cutting(
    g: &DiGraph,
    k: f64,
    fault: FaultModel,
    epsilon: f64,
    opts: &LpOptions,
) -> Result<FractionalSolution, SpannerLpError> {
    check_stretch(k)?;
    if fault.r == 0 {
        return solve_lp_cutting(g, k, epsilon);
    }
    let blocks = ft_blocks(g, fault, opts)?
        .into_iter()
        .map(|(e, fault, mask)| Block {
            edge: e,
            demand: (g.edge(e).source, g.edge(e).target),
            fault,
            mask: Some(mask),
        })
        .collect();
    // keeping every edge survives any fault set
    solve(g, k, epsilon, blocks, vec![1.0; g.m()])
}

fn solve(
    g: &DiGraph,
    k: f64,
    epsilon: f64,
    blocks: Vec<Block>,
    mut center: Vec<f64>,
) -> Result<FractionalSolution, SpannerLpError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(SpannerLpError::InvalidEpsilon(epsilon));
    }
    let m = g.m();
    let cost = |x: &[f64]| -> f64 { g.edges().iter().zip(x).map(|(e, v)| e.cost * v).sum() };
    let costs: Vec<f64> = g.edges().iter().map(|e| e.cost).collect();
    let mut lp = LinearProgram::new();
    for e in g.edges() {
        lp.add_row(Vec::new(), Sense::Le, e.cost);
    }
    let mut pools: Vec<CutPool> = blocks.iter().map(|_| CutPool::default()).collect();
    // cheapest stretch path per block, for topping up a short probe
    let fallback: Vec<Vec<usize>> = blocks
        .iter()
        .map(|b| {
            let (u, v) = b.demand;
            let budget = stretch_budget(k, shortest_distances_masked(g, u, false, b.mask.as_ref())[v]);
            let q = RspQuery { graph: g, source: u, target: v, budget, weights: &costs, forbidden: b.mask.as_ref(), epsilon: 0.0 };
            let found = if g.is_unit_length() { rsp_exact_hop(&q) } else { rsp_exact_labels(&q) };
            found.expect("every surviving demand edge is a stretch path").path.edges
        })
        .collect();
    let mut upper = cost(&center);
    let mut master_x = center.clone();
    let mut warm: Option<Basis> = None;
    let mut lower_bound = 0.0;
    let done = |lo: f64, up: f64| {
        if epsilon > 0.0 {
            up <= (1.0 + epsilon) * lo
        } else {
            up - lo <= 1e-9 * lo.max(1.0)
        }
    };
    let mut alpha = ALPHA;
    for round in 0..MAX_ROUNDS {
        let probe: Vec<f64> = if round == 0 {
            // near zero, so every block yields a cut
            vec![1e-3; m]
        } else {
            center.iter().zip(&master_x).map(|(c, x)| alpha * c + (1.0 - alpha) * x).collect()
        };
        let mut added = 0;
        let mut least = f64::INFINITY;
        let mut repaired = probe.clone();
        for (i, (b, pool)) in blocks.iter().zip(&mut pools).enumerate() {
            let mask = b.mask.as_ref();
            if probe[b.edge] >= 1.0 || pool.reroute(&probe) >= 1.0 || bottleneck_capacity(g, b.demand, k, &probe, mask) >= 1.0 {
                continue;
            }
            let sep = separate(g, k, &probe, b.demand, mask, pool, 1.0)?;
            least = least.min(sep.value);
            if sep.value < 1.0 {
                for &f in &fallback[i] {
                    repaired[f] = repaired[f].max(probe[f] + 1.0 - sep.value);
                }
            }
            if sep.value >= 1.0 || sep.min_path <= 0.0 || sep.value >= sep.min_path * (1.0 - ADD_TOL) {
                continue;
            }
            let scale = 1.0 / sep.min_path.min(1.0);
            let col = lp.add_var(-1.0);
            for (f, &yf) in sep.y.iter().enumerate() {
                if yf > 0.0 {
                    lp.rows[f].coeffs.push((col, yf * scale));
                }
            }
            added += 1;
        }
        if least > 0.0 && cost(&probe) / least.min(1.0) < upper {
            upper = cost(&probe) / least.min(1.0);
            let lift = 1.0 / least.min(1.0);
            center = probe.iter().map(|v| v * lift).collect();
        }
        if cost(&repaired) < upper {
            upper = cost(&repaired);
            center = repaired;
        }
        // a probe without cuts moved the center; try the master point next
        alpha = if added == 0 { 0.0 } else { ALPHA };
        if added > 0 {
            let sol = solve_lp_with(&lp, &SolverOptions::default(), warm.as_ref())?;
            if !sol.is_optimal() {
                return Err(SpannerLpError::MasterStatus(format!("cut master {:?}", sol.status)));
            }
            lower_bound = -sol.objective;
            master_x = sol.duals.iter().map(|&p| (-p).max(0.0)).collect();
            warm = Some(sol.basis);
        }
        if done(lower_bound, upper) {
            break;
        }
    }
    finish(g, k, center, lower_bound, epsilon, &blocks, pools)
}

/// Indicator of the greedy spanner: edges by increasing length, each kept
/// unless the edges kept so far already span it.
fn greedy_spanner(g: &DiGraph, k: f64) -> Vec<f64> {
    let m = g.m();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| g.edge(a).length.total_cmp(&g.edge(b).length).then(g.edge(a).cost.total_cmp(&g.edge(b).cost)).then(a.cmp(&b)));
    let mut kept = Vec::new();
    let mut x = vec![0.0; m];
    for e in order {
        let (u, v) = (g.edge(e).source, g.edge(e).target);
        let budget = stretch_budget(k, shortest_distances_masked(g, u, false, None)[v]);
        let mask = Mask::only_edges(g, &kept);
        if shortest_distances_masked(g, u, false, Some(&mask))[v] > budget {
            kept.push(e);
            x[e] = 1.0;
        }
    }
    x
}

/// Routes every block under `x`, then scales so each carries one unit.
fn finish(
    g: &DiGraph,
    k: f64,
    x: Vec<f64>,
    lower_bound: f64,
    epsilon: f64,
    blocks: &[Block],
    mut pools: Vec<CutPool>,
) -> Result<FractionalSolution, SpannerLpError> {
    let m = g.m();
    let mut routed = Vec::with_capacity(blocks.len());
    let mut least = f64::INFINITY;
    for (b, pool) in blocks.iter().zip(&mut pools) {
        let sep = separate(g, k, &x, b.demand, b.mask.as_ref(), pool, 1.0)?;
        least = least.min(sep.value);
        routed.push(sep);
    }
    if !(least > 0.0) {
        return Err(SpannerLpError::MasterStatus("cutting planes ended with an unroutable demand".into()));
    }
    let lift = 1.0 / least.min(1.0);
    let mut x: Vec<f64> = x.iter().map(|v| v * lift).collect();
    let mut flows = Vec::with_capacity(blocks.len());
    for ((b, sep), pool) in blocks.iter().zip(routed).zip(pools) {
        let mut paths: Vec<PathFlow> = pool
            .paths
            .into_iter()
            .zip(sep.flows)
            .filter(|(_, f)| *f > 0.0)
            .map(|(path, flow)| PathFlow { path, flow: flow / sep.value })
            .collect();
        paths.sort_by(|a, b| a.path.edges.cmp(&b.path.edges));
        let flow = DemandFlow { demand: b.demand, fault: b.fault.clone(), paths };
        for (f, load) in flow.edge_load(m).into_iter().enumerate() {
            x[f] = x[f].max(load);
        }
        flows.push(flow);
    }
    let objective = g.edges().iter().zip(&x).map(|(e, v)| e.cost * v).sum();
    let mode = if epsilon == 0.0 { SolveMode::Exact } else { SolveMode::Colgen };
    Ok(FractionalSolution { x, flows, objective, mode, epsilon, lower_bound: lower_bound.min(objective) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_random_digraph, LengthModel};
    use crate::spanner_lp::{check_fractional_feasibility, solve_lp_exact, Feasibility};

    #[test]
    fn triangle() {
        let g = DiGraph::from_pairs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let sol = solve_lp_cutting(&g, 2.0, 0.0).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-7);
        assert_eq!(sol.mode, SolveMode::Exact);
        assert_eq!(solve_lp_cutting(&g, 2.0, 0.1).unwrap().mode, SolveMode::Colgen);
        sol.check_decomposition(&g, 2.0, None).unwrap();
    }

    #[test]
    fn empty_graph() {
        let g = DiGraph::new(3, Vec::new()).unwrap();
        assert_eq!(solve_lp_cutting(&g, 3.0, 0.0).unwrap().objective, 0.0);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let g = DiGraph::from_pairs(2, &[(0, 1)]).unwrap();
        assert!(matches!(solve_lp_cutting(&g, 2.0, -0.1), Err(SpannerLpError::InvalidEpsilon(_))));
    }

    #[test]
    fn matches_exact_on_random_graphs() {
        for seed in 0..12 {
            let lengths = if seed % 2 == 0 { LengthModel::Unit } else { LengthModel::Uniform { lo: 1.0, hi: 4.0 } };
            let g = gen_random_digraph(8, 0.35, lengths, seed).unwrap();
            for k in [2.0, 3.0] {
                let exact = solve_lp_exact(&g, k, 100_000).unwrap();
                let cut = solve_lp_cutting(&g, k, 0.0).unwrap();
                let tol = 1e-6 * exact.objective.max(1.0);
                assert!((cut.objective - exact.objective).abs() <= tol, "seed {seed} k {k}: {} vs {}", cut.objective, exact.objective);
                assert!(cut.lower_bound <= exact.objective + tol);
                assert_eq!(check_fractional_feasibility(&g, k, &cut.x).unwrap(), Feasibility::Feasible);
                cut.check_decomposition(&g, k, None).unwrap();
            }
        }
    }

    #[test]
    fn epsilon_bounds_the_gap() {
        let g = gen_random_digraph(14, 0.3, LengthModel::Unit, 5).unwrap();
        let exact = solve_lp_exact(&g, 3.0, 100_000).unwrap();
        let cut = solve_lp_cutting(&g, 3.0, 0.05).unwrap();
        assert!(cut.objective <= 1.05 * exact.objective + 1e-9);
        assert!(cut.objective <= 1.05 * cut.lower_bound + 1e-9);
        assert!(cut.lower_bound <= exact.objective + 1e-7);
    }

    #[test]
    fn fault_tolerant_matches_column_generation() {
        use crate::graph::FaultKind;
        use crate::spanner_lp::solve_ft_lp;
        for seed in 0..8 {
            let g = gen_random_digraph(6, 0.5, LengthModel::Unit, seed).unwrap();
            for kind in [FaultKind::Vertex, FaultKind::Edge] {
                let fault = FaultModel::new(kind, 1);
                let reference = solve_ft_lp(&g, 3.0, fault.clone(), 0.0).unwrap();
                let cut = solve_ft_lp_cutting(&g, 3.0, fault.clone(), 0.0, &LpOptions::default()).unwrap();
                assert!((cut.objective - reference.objective).abs() <= 1e-6 * reference.objective.max(1.0), "seed {seed}: {} vs {}", cut.objective, reference.objective);
                cut.check_decomposition(&g, 3.0, Some(&fault)).unwrap();
            }
        }
    }

    #[test]
    fn fault_tolerant_needs_unit_lengths() {
        let g = gen_random_digraph(5, 0.5, LengthModel::Uniform { lo: 1.0, hi: 3.0 }, 1).unwrap();
        let fault = FaultModel::new(crate::graph::FaultKind::Edge, 1);
        assert!(matches!(solve_ft_lp_cutting(&g, 2.0, fault, 0.0, &LpOptions::default()), Err(SpannerLpError::NotUnitLength)));
    }
}
