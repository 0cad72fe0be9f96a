//! Solve, round and verify in one call, with a machine-readable report.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{enumerate_stretch_paths, DiGraph, EdgeId, FaultModel, GraphError, VertexId};
use crate::instances::{GapKind, GapMeta, GapWitness};
use crate::rounding::{round, RoundingConfig, RoundingError, RoundingMode, SpannerSolution};
use crate::spanner_lp::{
    check_fractional_feasibility, solve_ft_lp_cutting, solve_ft_lp_with, solve_lp_colgen_with, solve_lp_cutting, solve_lp_exact, solve_lp_exact_grouped,
    Feasibility, FractionalSolution, LpOptions, SolveMode, SpannerLpError,
};
use crate::verify::{
    brute_force_minrep, brute_force_opt_with, brute_force_setcover, check_setcover_neighbourhoods, verify_ft_with,
    verify_spanner, BruteForceOptions, VerifyError, VerifyReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpChoice {
    /// Exact when every demand's paths fit under `max_paths`, else within
    /// `1+ε`; both by cutting planes. Fault-tolerant runs are always exact.
    Auto,
    Exact,
    Colgen,
    Cutting,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub k: f64,
    pub mode: RoundingMode,
    pub epsilon: f64,
    pub seed: u64,
    pub trials: Option<usize>,
    pub c: Option<f64>,
    pub fault: Option<FaultModel>,
    pub lp: LpChoice,
    pub max_paths: usize,
    pub max_fault_sets: usize,
    /// Compute the brute-force optimum when the graph has at most this many edges.
    pub brute_max_edges: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 3.0,
            mode: RoundingMode::GeneralK,
            epsilon: 0.1,
            seed: 0,
            trials: None,
            c: None,
            fault: None,
            lp: LpChoice::Auto,
            max_paths: 100_000,
            max_fault_sets: 5_000,
            brute_max_edges: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] SpannerLpError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("certificate infeasible: demand ({}, {}) has cut value {value}", demand.0, demand.1)]
    CertificateInfeasible { demand: (VertexId, VertexId), value: f64, cut: Vec<f64> },
    #[error("certificate has {got} capacities, graph has {expected} edges")]
    CertificateShape { got: usize, expected: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub n: usize,
    pub m: usize,
    pub unit_length: bool,
    pub total_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpInfo {
    pub objective: f64,
    pub lower_bound: f64,
    pub mode: SolveMode,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingInfo {
    pub algo: RoundingMode,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpannerInfo {
    pub size: usize,
    pub cost: f64,
    pub edges: Vec<EdgeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub solve_ms: f64,
    pub round_ms: f64,
    pub verify_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub brute_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: InstanceInfo,
    pub k: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fault: Option<FaultModel>,
    pub lp: LpInfo,
    pub rounding: RoundingInfo,
    pub spanner: SpannerInfo,
    pub verification: VerifyReport,
    /// Spanner cost over the certified LP lower bound; absent when that bound is 0.
    pub ratio_vs_lp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub brute_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ratio_vs_opt: Option<f64>,
    pub timings: Timings,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The JSON form with every wall-time field zeroed.
    pub fn to_json_untimed(&self) -> String {
        let mut r = self.clone();
        r.timings = Timings { brute_ms: r.timings.brute_ms.map(|_| 0.0), ..Timings::default() };
        r.to_json()
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub report: RunReport,
    pub fractional: FractionalSolution,
    pub spanner: SpannerSolution,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Whether every demand's stretch paths can be listed within `max_paths` in total.
pub fn fits_exact(g: &DiGraph, k: f64, max_paths: usize) -> Result<bool, GraphError> {
    let mut left = max_paths;
    for e in g.edges() {
        match enumerate_stretch_paths(g, (e.source, e.target), k, left) {
            Ok(p) => left -= p.len(),
            Err(GraphError::PathOverflow { .. }) => return Ok(false),
            Err(other) => return Err(other),
        }
    }
    Ok(true)
}

/// Solves the relaxation the configuration asks for.
pub fn solve(g: &DiGraph, cfg: &PipelineConfig) -> Result<FractionalSolution, PipelineError> {
    let opts = LpOptions { max_paths: cfg.max_paths, max_fault_sets: cfg.max_fault_sets, ..LpOptions::default() };
    if let Some(fault) = cfg.fault.filter(|f| f.r > 0) {
        return Ok(match cfg.lp {
            LpChoice::Exact => solve_ft_lp_with(g, cfg.k, fault, 0.0, &opts)?,
            LpChoice::Colgen => solve_ft_lp_with(g, cfg.k, fault, cfg.epsilon, &opts)?,
            LpChoice::Auto => solve_ft_lp_cutting(g, cfg.k, fault, 0.0, &opts)?,
            LpChoice::Cutting => solve_ft_lp_cutting(g, cfg.k, fault, cfg.epsilon, &opts)?,
        });
    }
    Ok(match cfg.lp {
        LpChoice::Auto => {
            let eps = if fits_exact(g, cfg.k, cfg.max_paths)? { 0.0 } else { cfg.epsilon };
            solve_lp_cutting(g, cfg.k, eps)?
        }
        LpChoice::Exact => solve_lp_exact(g, cfg.k, cfg.max_paths)?,
        LpChoice::Colgen => solve_lp_colgen_with(g, cfg.k, cfg.epsilon, &opts)?,
        LpChoice::Cutting => solve_lp_cutting(g, cfg.k, cfg.epsilon)?,
    })
}

pub fn run_pipeline(g: &DiGraph, cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let t = Instant::now();
    let frac = solve(g, cfg)?;
    let solve_ms = ms(t);

    let rcfg = RoundingConfig {
        k: cfg.k,
        seed: cfg.seed,
        trials: cfg.trials,
        c: cfg.c,
        epsilon: cfg.epsilon.max(f64::MIN_POSITIVE),
        fault: cfg.fault,
        mode: cfg.mode,
        ..RoundingConfig::default()
    };
    let t = Instant::now();
    let sol = round(g, &frac, &rcfg)?;
    let round_ms = ms(t);

    let t = Instant::now();
    let verdict = match cfg.fault {
        Some(f) => verify_ft_with(g, cfg.k, &sol.edges, &f, cfg.max_fault_sets.max(1))?,
        None => verify_spanner(g, cfg.k, &sol.edges),
    };
    let verify_ms = ms(t);

    let (brute_opt, brute_ms) = if g.m() <= cfg.brute_max_edges {
        let t = Instant::now();
        let opts = BruteForceOptions { max_units: cfg.brute_max_edges, groups: None, max_fault_sets: cfg.max_fault_sets };
        let r = brute_force_opt_with(g, cfg.k, cfg.fault.as_ref(), &opts)?;
        (Some(r.cost), Some(ms(t)))
    } else {
        (None, None)
    };

    let lb = frac.lower_bound;
    let report = RunReport {
        instance: InstanceInfo {
            n: g.n(),
            m: g.m(),
            unit_length: g.is_unit_length(),
            total_cost: g.edges().iter().map(|e| e.cost).sum(),
        },
        k: cfg.k,
        fault: cfg.fault,
        lp: LpInfo { objective: frac.objective, lower_bound: lb, mode: frac.mode, epsilon: frac.epsilon },
        rounding: RoundingInfo { algo: cfg.mode, seed: cfg.seed, params: sol.params.clone() },
        spanner: SpannerInfo { size: sol.size, cost: sol.cost, edges: sol.edges.clone() },
        verification: verdict,
        ratio_vs_lp: (lb > 0.0).then(|| sol.cost / lb),
        brute_opt,
        ratio_vs_opt: brute_opt.filter(|&o| o > 0.0).map(|o| sol.cost / o),
        timings: Timings { solve_ms, round_ms, verify_ms, brute_ms },
    };
    Ok(PipelineOutput { report, fractional: frac, spanner: sol })
}

#[derive(Clone, Debug)]
pub struct GapCheckOptions {
    /// Brute-force the integral optimum when there are at most this many edge groups.
    pub brute_max_units: usize,
    pub max_paths: usize,
}

impl Default for GapCheckOptions {
    fn default() -> Self {
        Self { brute_max_units: 20, max_paths: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCheckReport {
    pub kind: GapKind,
    pub k: f64,
    pub n: usize,
    pub m: usize,
    pub certificate_feasible: bool,
    pub certificate_cost: f64,
    pub predicted_fractional_cost_bound: f64,
    pub within_bound: bool,
    /// Exact optimum of the relaxation (groups share capacity), when enumerable.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lp_optimum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub brute_opt: Option<f64>,
    /// Integral optimum over the relaxation optimum.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub empirical_ratio: Option<f64>,
    /// Optimum of the underlying Min-Rep or set-cover instance.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness_optimum: Option<usize>,
    /// Every auxiliary neighbourhood of the brute-force spanner is a set cover.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub neighbourhoods_cover: Option<bool>,
}

/// Validates a gap certificate's capacities and, on small instances,
/// measures the integral optimum against the relaxation optimum.
pub fn check_gap(g: &DiGraph, meta: &GapMeta, x: &[f64], opts: &GapCheckOptions) -> Result<GapCheckReport, PipelineError> {
    if x.len() != g.m() {
        return Err(PipelineError::CertificateShape { got: x.len(), expected: g.m() });
    }
    if let Feasibility::Violated { demand, value, cut, .. } = check_fractional_feasibility(g, meta.k, x)? {
        return Err(PipelineError::CertificateInfeasible { demand, value, cut });
    }
    let cost: f64 = g.edges().iter().zip(x).map(|(e, v)| e.cost * v).sum();
    let witness_optimum = match &meta.witness {
        GapWitness::MinRep { instance } => brute_force_minrep(instance).ok(),
        GapWitness::SetCover(w) => brute_force_setcover(w.num_elements, &w.sets).ok(),
    };
    let (mut lp_optimum, mut brute_opt, mut neighbourhoods_cover) = (None, None, None);
    if meta.edge_groups.len() <= opts.brute_max_units {
        let bopts = BruteForceOptions {
            max_units: opts.brute_max_units,
            groups: Some(meta.edge_groups.clone()),
            ..BruteForceOptions::default()
        };
        let r = brute_force_opt_with(g, meta.k, None, &bopts)?;
        if let GapWitness::SetCover(w) = &meta.witness {
            neighbourhoods_cover = Some(check_setcover_neighbourhoods(g, w, &r.witness).is_ok());
        }
        brute_opt = Some(r.cost);
        if fits_exact(g, meta.k, opts.max_paths)? {
            lp_optimum = Some(solve_lp_exact_grouped(g, meta.k, opts.max_paths, &meta.edge_groups)?.objective);
        }
    }
    Ok(GapCheckReport {
        kind: meta.kind,
        k: meta.k,
        n: g.n(),
        m: g.m(),
        certificate_feasible: true,
        certificate_cost: cost,
        predicted_fractional_cost_bound: meta.predicted_fractional_cost_bound,
        within_bound: cost <= meta.predicted_fractional_cost_bound + 1e-9,
        lp_optimum,
        brute_opt,
        empirical_ratio: brute_opt.zip(lp_optimum).filter(|(_, l)| *l > 0.0).map(|(b, l)| b / l),
        witness_optimum,
        neighbourhoods_cover,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FaultKind;

    #[test]
    fn triangle_two_spanner() {
        let g = DiGraph::from_pairs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let cfg = PipelineConfig { k: 2.0, mode: RoundingMode::TwoSpanner, brute_max_edges: 10, ..Default::default() };
        let out = run_pipeline(&g, &cfg).unwrap();
        assert!(out.report.verification.valid);
        assert!(out.report.ratio_vs_lp.unwrap() >= 1.0 - 1e-6);
        assert_eq!(out.report.brute_opt, Some(2.0));
        assert_eq!(out.report.lp.mode, SolveMode::Exact);
    }

    #[test]
    fn rerun_is_identical_without_timings() {
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 3), (0, 2), (1, 3), (0, 3)]).unwrap();
        let cfg = PipelineConfig { k: 3.0, seed: 9, ..Default::default() };
        let a = run_pipeline(&g, &cfg).unwrap().report.to_json_untimed();
        let b = run_pipeline(&g, &cfg).unwrap().report.to_json_untimed();
        assert_eq!(a, b);
    }

    #[test]
    fn auto_falls_back_to_approximation() {
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 3), (0, 2), (1, 3), (0, 3)]).unwrap();
        let cfg = PipelineConfig { k: 3.0, max_paths: 2, ..Default::default() };
        let out = run_pipeline(&g, &cfg).unwrap();
        assert_eq!(out.report.lp.mode, SolveMode::Colgen);
        assert!(out.report.verification.valid);
    }

    #[test]
    fn colgen_on_request() {
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 3), (0, 2), (1, 3), (0, 3)]).unwrap();
        let cfg = PipelineConfig { k: 3.0, lp: LpChoice::Colgen, ..Default::default() };
        let out = run_pipeline(&g, &cfg).unwrap();
        assert_eq!(out.report.lp.mode, SolveMode::Colgen);
        assert!(out.report.verification.valid);
    }

    #[test]
    fn gap_check_small_setcover() {
        let gap = crate::instances::build_setcover_gap_with_aux(2, 1).unwrap();
        let r = check_gap(&gap.graph, &gap.meta, &gap.certificate.x, &GapCheckOptions::default()).unwrap();
        assert!(r.within_bound);
        assert_eq!(r.witness_optimum, Some(2));
        assert_eq!(r.neighbourhoods_cover, Some(true));
        assert!(r.empirical_ratio.unwrap() > 1.0);
    }

    #[test]
    fn gap_check_rejects_tampered_certificate() {
        let mr = crate::instances::MinRepInstance::identity(2, 2).unwrap();
        let gap = crate::instances::build_minrep_gap_instance(&mr, 5).unwrap();
        let opts = GapCheckOptions { brute_max_units: 0, ..Default::default() };
        assert!(check_gap(&gap.graph, &gap.meta, &gap.certificate.x, &opts).unwrap().within_bound);
        // a tail-path edge carries its own demand alone
        let mut tampered = gap.certificate.x.clone();
        let e = (gap.meta.params["E2"] + gap.meta.params["E_C"]) as usize;
        tampered[e] = 0.0;
        assert!(matches!(check_gap(&gap.graph, &gap.meta, &tampered, &opts), Err(PipelineError::CertificateInfeasible { .. })));
    }

    #[test]
    fn fault_tolerant_diamond() {
        let g = DiGraph::from_pairs(4, &[(0, 1), (1, 3), (0, 2), (2, 3), (0, 3)]).unwrap();
        let cfg = PipelineConfig {
            k: 2.0,
            fault: Some(FaultModel::new(FaultKind::Vertex, 1)),
            seed: 1,
            ..Default::default()
        };
        let out = run_pipeline(&g, &cfg).unwrap();
        assert!(out.report.verification.valid, "{:?}", out.report.verification);
    }
}
