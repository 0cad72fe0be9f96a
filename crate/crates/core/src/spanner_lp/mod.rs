//! The flow relaxation of directed k-spanner: one unit of flow per demand
//! edge over stretch-bounded paths, each path capped by per-edge capacities
//! `x_e`, minimizing `Σ c_e x_e`.
//!
//! Exact solves enumerate every path; column generation prices paths with
//! the restricted shortest path oracle against the master duals. The
//! fault-tolerant variant adds one flow block per (fault set, demand) over
//! shared capacities.

mod cut;
mod cutting;
mod master;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DiGraph, EdgeId, FaultModel, FaultSet, GraphError, Path, VertexId};
use crate::lp::LpError;

pub use cut::{
    check_fractional_feasibility, check_ft_feasibility, fault_threshold, interdiction_oracle, min_fractional_cut, Feasibility,
    InterdictionSolution,
};
pub use cutting::{solve_ft_lp_cutting, solve_lp_cutting};
pub use master::{
    solve_ft_lp, solve_ft_lp_with, solve_lp_colgen, solve_lp_colgen_with, solve_lp_exact, solve_lp_exact_grouped,
};

/// Smallest total flow a demand must carry.
pub const FLOW_TOL: f64 = 1e-9;
/// A demand counts as satisfied when its minimum cut is at least `1 - CUT_TOL`.
pub const CUT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Exact,
    Colgen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathFlow {
    pub path: Path,
    pub flow: f64,
}

/// Flow decomposition of one demand, optionally under one fault set.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandFlow {
    pub demand: (VertexId, VertexId),
    pub fault: Option<FaultSet>,
    pub paths: Vec<PathFlow>,
}

impl DemandFlow {
    pub fn total(&self) -> f64 {
        self.paths.iter().map(|p| p.flow).sum()
    }

    /// Flow through each edge, indexed by edge id.
    pub fn edge_load(&self, m: usize) -> Vec<f64> {
        let mut load = vec![0.0; m];
        for pf in &self.paths {
            for &e in &pf.path.edges {
                load[e] += pf.flow;
            }
        }
        load
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSolution {
    pub x: Vec<f64>,
    pub flows: Vec<DemandFlow>,
    pub objective: f64,
    pub mode: SolveMode,
    pub epsilon: f64,
    /// Certified lower bound on the LP optimum (not serialized).
    pub lower_bound: f64,
}

#[derive(Debug, Error)]
pub enum SpannerLpError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("epsilon must be finite and nonnegative (positive for column generation), got {0}")]
    InvalidEpsilon(f64),
    #[error("the fault-tolerant relaxation needs unit lengths")]
    NotUnitLength,
    #[error("fault budget r={r} with {sets} fault sets exceeds the enumeration limit (r_max={r_max}, max sets {limit})")]
    FaultBudgetTooLarge { r: usize, r_max: usize, sets: u128, limit: usize },
    #[error("column generation stopped after {limit} rounds; objective {objective} vs lower bound {lower_bound}")]
    IterationLimit { limit: usize, objective: f64, lower_bound: f64, best: Box<FractionalSolution> },
    #[error("master problem reported {0}")]
    MasterStatus(String),
    #[error("malformed solution: {0}")]
    Malformed(String),
}

/// Knobs shared by the solvers.
#[derive(Clone, Debug)]
pub struct LpOptions {
    pub max_paths: usize,
    pub r_max: usize,
    pub max_fault_sets: usize,
    /// Round cap per flow block.
    pub rounds_per_block: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { max_paths: 100_000, r_max: 2, max_fault_sets: 5_000, rounds_per_block: 200 }
    }
}

#[derive(Serialize, Deserialize)]
struct XJson {
    edge: EdgeId,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct PathJson {
    vertices: Vec<VertexId>,
    flow: f64,
}

#[derive(Serialize, Deserialize)]
struct FlowJson {
    u: VertexId,
    v: VertexId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    fault: Option<FaultSet>,
    paths: Vec<PathJson>,
}

#[derive(Serialize, Deserialize)]
struct SolutionJson {
    objective: f64,
    x: Vec<XJson>,
    flows: Vec<FlowJson>,
    mode: SolveMode,
    epsilon: f64,
}

impl FractionalSolution {
    /// `Σ c_e x_e`.
    pub fn cost(&self, g: &DiGraph) -> f64 {
        g.edges().iter().zip(&self.x).map(|(e, x)| e.cost * x).sum()
    }

    pub fn to_json(&self) -> String {
        let doc = SolutionJson {
            objective: self.objective,
            x: self.x.iter().enumerate().map(|(edge, &value)| XJson { edge, value }).collect(),
            flows: self
                .flows
                .iter()
                .map(|f| FlowJson {
                    u: f.demand.0,
                    v: f.demand.1,
                    fault: f.fault.clone(),
                    paths: f
                        .paths
                        .iter()
                        .map(|p| PathJson { vertices: p.path.vertices.clone(), flow: p.flow })
                        .collect(),
                })
                .collect(),
            mode: self.mode,
            epsilon: self.epsilon,
        };
        serde_json::to_string_pretty(&doc).expect("solution serializes")
    }

    /// Parses the JSON form, resolving vertex sequences against `g`.
    pub fn from_json(g: &DiGraph, text: &str) -> Result<Self, SpannerLpError> {
        let doc: SolutionJson = serde_json::from_str(text).map_err(|e| SpannerLpError::Malformed(e.to_string()))?;
        let mut x = vec![0.0; g.m()];
        for entry in doc.x {
            if entry.edge >= g.m() {
                return Err(SpannerLpError::Malformed(format!("edge {} out of range", entry.edge)));
            }
            x[entry.edge] = entry.value;
        }
        let mut flows = Vec::with_capacity(doc.flows.len());
        for f in doc.flows {
            let mut paths = Vec::with_capacity(f.paths.len());
            for p in f.paths {
                let path = Path::from_vertices(g, &p.vertices)
                    .ok_or_else(|| SpannerLpError::Malformed(format!("{:?} is not a path of the graph", p.vertices)))?;
                paths.push(PathFlow { path, flow: p.flow });
            }
            flows.push(DemandFlow { demand: (f.u, f.v), fault: f.fault, paths });
        }
        Ok(Self { x, flows, objective: doc.objective, mode: doc.mode, epsilon: doc.epsilon, lower_bound: doc.objective })
    }

    /// Checks the flow invariants directly on the decomposition: each demand
    /// carries one unit, loads stay within capacities, every path meets the
    /// stretch budget and avoids its fault set. Returns the first violation.
    pub fn check_decomposition(&self, g: &DiGraph, k: f64, fault: Option<&FaultModel>) -> Result<(), String> {
        use crate::graph::{shortest_distances_masked, stretch_budget, Mask};
        for f in &self.flows {
            let (u, v) = f.demand;
            if f.total() < 1.0 - FLOW_TOL {
                return Err(format!("demand ({u},{v}) carries {}", f.total()));
            }
            let load = f.edge_load(g.m());
            if let Some(e) = (0..g.m()).find(|&e| load[e] > self.x[e] + FLOW_TOL) {
                return Err(format!("demand ({u},{v}) loads edge {e} with {} > {}", load[e], self.x[e]));
            }
            let mask = match (&f.fault, fault) {
                (Some(set), Some(model)) => model.mask(g, set),
                _ => Mask::new(g),
            };
            let budget = stretch_budget(k, shortest_distances_masked(g, u, false, Some(&mask))[v]);
            for pf in &f.paths {
                let p = &pf.path;
                if p.source() != u || p.target() != v || !p.is_simple() {
                    return Err(format!("bad path {:?} for ({u},{v})", p.vertices));
                }
                if p.length > budget {
                    return Err(format!("path {:?} exceeds budget {budget}", p.vertices));
                }
                if pf.flow < 0.0 || p.edges.iter().any(|&e| !mask.edge_alive(e)) {
                    return Err(format!("path {:?} crosses its fault set or has negative flow", p.vertices));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DiGraph;

    #[test]
    fn json_round_trip() {
        let g = DiGraph::from_pairs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let sol = solve_lp_exact(&g, 2.0, 100).unwrap();
        let text = sol.to_json();
        let back = FractionalSolution::from_json(&g, &text).unwrap();
        assert_eq!(back.x, sol.x);
        assert_eq!(back.flows, sol.flows);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["mode"], "exact");
        assert!(v["flows"][0].get("fault").is_none());
        assert_eq!(v["x"][0]["edge"], 0);
    }

    #[test]
    fn from_json_rejects_non_paths() {
        let g = DiGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let text = r#"{"objective":1,"x":[],"flows":[{"u":0,"v":2,"paths":[{"vertices":[0,2],"flow":1}]}],"mode":"exact","epsilon":0}"#;
        assert!(matches!(FractionalSolution::from_json(&g, text), Err(SpannerLpError::Malformed(_))));
    }
}
