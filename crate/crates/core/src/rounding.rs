//! Randomized rounding of a fractional solution into an edge subset.
//!
//! Randomness is counter-based: every (trial, purpose) pair owns a ChaCha
//! stream derived from the master seed and draws are taken in vertex (or
//! edge) order, so each trial is reproducible on its own.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{arborescence, arborescence_masked, DiGraph, Direction, EdgeId, FaultKind, FaultModel, Mask};
use crate::spanner_lp::FractionalSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMode {
    GeneralK,
    ThreeSpanner,
    TwoSpanner,
    TwoSpannerBoundedDegree,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingConfig {
    pub k: f64,
    pub seed: u64,
    /// Overrides the number of sampling rounds or trials.
    pub trials: Option<usize>,
    /// Inflation constant; defaults to 1 for the 3-spanner rule and 6 for
    /// the 2-spanner rules.
    pub c: Option<f64>,
    /// Repetitions of the 3-spanner rule are `⌈c_rep · ln n⌉`.
    pub c_rep: f64,
    pub c1: f64,
    pub c2: f64,
    pub epsilon: f64,
    pub fault: Option<FaultModel>,
    pub mode: RoundingMode,
}

impl Default for RoundingConfig {
    fn default() -> Self {
        Self {
            k: 3.0,
            seed: 0,
            trials: None,
            c: None,
            c_rep: 1.0,
            c1: 1.0,
            c2: 1.0,
            epsilon: 0.1,
            fault: None,
            mode: RoundingMode::GeneralK,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoundingError {
    #[error("(k+r)^(k+r) overflows for k={k}, r={r}")]
    ParameterOverflow { k: f64, r: usize },
    #[error("invalid rounding configuration: {0}")]
    InvalidConfig(String),
    #[error("rounding precondition failed: {0}")]
    Precondition(String),
}

/// Which rule put an edge into the output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    Threshold,
    Arborescence { round: usize, root: usize },
    E1,
    E2,
    Direct,
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tag::Threshold => f.write_str("threshold"),
            Tag::Arborescence { round, root } => write!(f, "arborescence({round},{root})"),
            Tag::E1 => f.write_str("E1"),
            Tag::E2 => f.write_str("E2"),
            Tag::Direct => f.write_str("direct"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub edge: EdgeId,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpannerSolution {
    pub edges: Vec<EdgeId>,
    pub size: usize,
    pub cost: f64,
    pub lp_objective: f64,
    pub provenance: Vec<ProvenanceEntry>,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
}

impl SpannerSolution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// First tag per edge wins.
struct Collector {
    tags: Vec<Option<Tag>>,
}

impl Collector {
    fn new(m: usize) -> Self {
        Self { tags: vec![None; m] }
    }

    fn add(&mut self, e: EdgeId, tag: Tag) -> bool {
        if self.tags[e].is_none() {
            self.tags[e] = Some(tag);
            true
        } else {
            false
        }
    }

    fn finish(self, g: &DiGraph, frac: &FractionalSolution, seed: u64, params: BTreeMap<String, f64>) -> SpannerSolution {
        let mut edges = Vec::new();
        let mut provenance = Vec::new();
        for (e, t) in self.tags.into_iter().enumerate() {
            if let Some(t) = t {
                edges.push(e);
                provenance.push(ProvenanceEntry { edge: e, tag: t.to_string() });
            }
        }
        SpannerSolution {
            size: edges.len(),
            cost: g.cost_of(&edges),
            edges,
            lp_objective: frac.objective,
            provenance,
            seed,
            params,
        }
    }
}

const ROOT: u64 = 0;
const DELETE: u64 = 1;
const T_DRAW: u64 = 2;
const T_PRIME: u64 = 3;

/// ChaCha stream owned by one (trial, purpose) pair.
pub fn trial_rng(seed: u64, trial: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 2) | purpose);
    rng
}

fn uniforms(seed: u64, trial: usize, purpose: u64, count: usize) -> Vec<f64> {
    let mut rng = trial_rng(seed, trial, purpose);
    (0..count).map(|_| rng.random::<f64>()).collect()
}

fn check_common(g: &DiGraph, frac: &FractionalSolution, cfg: &RoundingConfig) -> Result<(), RoundingError> {
    if frac.x.len() != g.m() {
        return Err(RoundingError::Precondition(format!("{} capacities for {} edges", frac.x.len(), g.m())));
    }
    for (name, v) in [("c_rep", cfg.c_rep), ("c1", cfg.c1), ("c2", cfg.c2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(RoundingError::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
    }
    if let Some(c) = cfg.c {
        if !(c > 0.0 && c.is_finite()) {
            return Err(RoundingError::InvalidConfig(format!("c must be positive, got {c}")));
        }
    }
    if cfg.trials == Some(0) && cfg.mode != RoundingMode::GeneralK {
        return Err(RoundingError::InvalidConfig("trials must be at least 1".into()));
    }
    Ok(())
}

fn ln_n(g: &DiGraph) -> f64 {
    (g.n() as f64).ln()
}

/// Dispatches on the mode and on whether a fault model with `r > 0` is set.
pub fn round(g: &DiGraph, frac: &FractionalSolution, cfg: &RoundingConfig) -> Result<SpannerSolution, RoundingError> {
    let ft = cfg.fault.is_some();
    match (cfg.mode, ft) {
        (RoundingMode::GeneralK, false) => round_general_k(g, frac, cfg),
        (RoundingMode::GeneralK, true) => round_general_k_ft(g, frac, cfg),
        (RoundingMode::ThreeSpanner, false) => round_3spanner(g, frac, cfg),
        (RoundingMode::ThreeSpanner, true) => round_3spanner_ft(g, frac, cfg),
        (RoundingMode::TwoSpanner, false) | (RoundingMode::TwoSpannerBoundedDegree, _) => round_2spanner(g, frac, cfg),
        (RoundingMode::TwoSpanner, true) => round_2spanner_ft(g, frac, cfg),
    }
}

/// `(3 n ln n)^{2/3}`, the threshold denominator and round count.
pub fn general_k_scale(n: usize) -> f64 {
    let n = n as f64;
    (3.0 * n * n.ln()).powf(2.0 / 3.0)
}

/// Threshold edges plus in- and out-arborescences of uniformly random roots.
pub fn round_general_k(g: &DiGraph, frac: &FractionalSolution, cfg: &RoundingConfig) -> Result<SpannerSolution, RoundingError> {
    check_common(g, frac, cfg)?;
    let n = g.n();
    let scale = general_k_scale(n);
    let rounds = cfg.trials.unwrap_or(scale.ceil() as usize);
    let threshold = 1.0 / scale;
    let mut params = BTreeMap::from([
        ("threshold".to_string(), threshold),
        ("rounds".to_string(), rounds as f64),
        ("scale".to_string(), scale),
    ]);
    let mut col = Collector::new(g.m());
    if n < 2 {
        return Ok(col.finish(g, frac, cfg.seed, params));
    }
    let mut threshold_edges = 0usize;
    for e in 0..g.m() {
        if frac.x[e] >= threshold {
            col.add(e, Tag::Threshold);
            threshold_edges += 1;
        }
    }
    let mut tree_edges = std::collections::BTreeSet::new();
    for round in 0..rounds {
        let root = trial_rng(cfg.seed, round, ROOT).random_range(0..n);
        for dir in [Direction::In, Direction::Out] {
            for e in arborescence(g, root, dir) {
                tree_edges.insert(e);
                col.add(e, Tag::Arborescence { round, root });
            }
        }
    }
    // deterministic size accounting
    let x_mass: f64 = frac.x.iter().map(|v| v.max(0.0)).sum();
    let threshold_bound = x_mass * scale;
    let tree_bound = 2 * (n - 1) * rounds;
    assert!(threshold_edges as f64 <= threshold_bound * (1.0 + 1e-12) + 1e-9, "threshold part exceeds x-mass bound");
    assert!(tree_edges.len() <= tree_bound, "arborescence part exceeds 2(n-1) per round");
    params.insert("threshold_edges".into(), threshold_edges as f64);
    params.insert("threshold_bound".into(), threshold_bound);
    params.insert("arborescence_edges".into(), tree_edges.len() as f64);
    params.insert("arborescence_bound".into(), tree_bound as f64);
    Ok(col.finish(g, frac, cfg.seed, params))
}

/// Parameters of failure sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FailureSampling {
    pub p: f64,
    /// `2(2r+2)(k+r)^{k+r} n ln n / (r^r k^k)`.
    pub a: f64,
    /// Balance point of `t = a/√t`, i.e. `a^{2/3}`.
    pub t: f64,
    /// `a/√t` evaluated at the balance point.
    pub ell: f64,
    pub rounds: usize,
}

/// Deletion probability `r/(k+r)` and the threshold/round balance.
pub fn failure_sampling_params(n: usize, k: f64, r: usize) -> Result<FailureSampling, RoundingError> {
    let rf = r as f64;
    let kr = k + rf;
    let big = kr.powf(kr);
    if !big.is_finite() {
        return Err(RoundingError::ParameterOverflow { k, r });
    }
    let nf = n as f64;
    let denom = rf.powf(rf) * k.powf(k);
    let a = 2.0 * (2.0 * rf + 2.0) * big * nf * nf.ln() / denom;
    if !a.is_finite() {
        return Err(RoundingError::ParameterOverflow { k, r });
    }
    let t = balance(a);
    let ell = a / t.sqrt();
    Ok(FailureSampling { p: rf / kr, a, t, ell, rounds: ell.ceil() as usize })
}

/// Fixed point of `t = a/√t`, polished so both sides agree to the last bit
/// where the floating-point grid allows it.
fn balance(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let c = a.cbrt();
    let mut t = c * c;
    for _ in 0..8 {
        let next = a / t.sqrt();
        if next == t {
            break;
        }
        // the map contracts by 1/2 around the root; average to land on it
        let mid = 0.5 * (t + next);
        if mid == t || mid == next {
            break;
        }
        t = mid;
    }
    t
}

/// Failure-sampled arborescences: before each root draw, every element
/// fails independently with probability `r/(k+r)`; trees are computed in the
/// surviving graph.
pub fn round_general_k_ft(g: &DiGraph, frac: &FractionalSolution, cfg: &RoundingConfig) -> Result<SpannerSolution, RoundingError> {
    check_common(g, frac, cfg)?;
    let Some(fault) = cfg.fault.filter(|f| f.r > 0) else {
        return round_general_k(g, frac, cfg);
    };
    if !g.is_unit_length() {
        return Err(RoundingError::Precondition("failure sampling needs unit lengths".into()));
    }
    let n = g.n();
    let fs = failure_sampling_params(n, cfg.k, fault.r)?;
    let rounds = cfg.trials.unwrap_or(fs.rounds);
    let threshold = if fs.t > 0.0 { 1.0 / fs.t } else { f64::INFINITY };
    let params = BTreeMap::from([
        ("p".to_string(), fs.p),
        ("t".to_string(), fs.t),
        ("ell".to_string(), fs.ell),
        ("rounds".to_string(), rounds as f64),
        ("threshold".to_string(), threshold),
        ("r".to_string(), fault.r as f64),
    ]);
    let mut col = Collector::new(g.m());
    for e in 0..g.m() {
        if frac.x[e] >= threshold {
            col.add(e, Tag::Threshold);
        }
    }
    for round in 0..rounds {
        let kills = uniforms(cfg.seed, round, DELETE, fault.universe(g));
        let mut mask = Mask::new(g);
        for (i, &u) in kills.iter().enumerate() {
            if u < fs.p {
                match fault.kind {
                    FaultKind::Vertex => mask.remove_vertex(g, i),
                    FaultKind::Edge => mask.remove_edge(i),
                }
            }
        }
        let alive: Vec<usize> = (0..n).filter(|&v| mask.vertex_alive(v)).collect();
        if alive.is_empty() {
            continue;
        }
        let root = alive[trial_rng(cfg.seed, round, ROOT).random_range(0..alive.len())];
        for dir in [Direction::In, Direction::Out] {
            for e in arborescence_masked(g, root, dir, Some(&mask)) {
                col.add(e, Tag::Arborescence { round, root });
            }
        }
    }
    Ok(col.finish(g, frac, cfg.seed, params))
}

/// One trial of the 3-spanner threshold rule; returns per-edge membership in
/// `E1` and `E2`.
pub fn three_spanner_trial(g: &DiGraph, x: &[f64], rho: f64, seed: u64, trial: usize) -> Vec<(bool, bool)> {
    let t = uniforms(seed, trial, T_DRAW, g.n());
    let tp = uniforms(seed, trial, T_PRIME, g.n());
    g.edges()
        .iter()
        .zip(x)
        .map(|(e, &xe)| {
            let (u, v) = (e.source, e.target);
            let lo_u = t[u].min(tp[u]);
            let lo_v = t[v].min(tp[v]);
            let e1 = lo_u.min(lo_v) <= rho * xe;
            let e2 = lo_u.max(lo_v) <= (rho * xe).max(0.0).sqrt();
            (e1, e2)
        })
        .collect()
}

fn three_spanner_union(
    g: &DiGraph,
    frac: &FractionalSolution,
    seed: u64,
    rho: f64,
    trials: usize,
    mut params: BTreeMap<String, f64>,
) -> SpannerSolution {
    params.insert("rho".into(), rho);
    params.insert("trials".into(), trials as f64);
    let mut col = Collector::new(g.m());
    for trial in 0..trials {
        for (e, (e1, e2)) in three_spanner_trial(g, &frac.x, rho, seed, trial).into_iter().enumerate() {
            if e1 {
                col.add(e, Tag::E1);
            } else if e2 {
                col.add(e, Tag::E2);
            }
        }
    }
    col.finish(g, frac, seed, params)
}

fn require_unit_k(g: &DiGraph, cfg: &RoundingConfig, k: f64, what: &str) -> Result<(), RoundingError> {
    if cfg.k != k {
        return Err(RoundingError::Precondition(format!("{what} rounding needs k={k}, got {}", cfg.k)));
    }
    if !g.is_unit_length() {
        return Err(RoundingError::Precondition(format!("{what} rounding needs unit lengths")));
    }
    Ok(())
}

/// `ρ = C √n ln n`, repeated `⌈c_rep ln n⌉` times.
pub fn round_3spanner(g: &DiGraph, frac: &FractionalSolution, cfg: &RoundingConfig) -> Result<SpannerSolution, RoundingError> {
    check_common(g, frac, cfg)?;
    require_unit_k(g, cfg, 3.0, "3-spanner")?;
    let c = cfg.c.unwrap_or(1.0);
    let rho = c * (g.n() as f64).sqrt() * ln_n(g);
    let trials = cfg.trials.unwrap_or(((cfg.c_rep * ln_n(g)).ceil() as usize).max(1));
    Ok(three_spanner_union(g, frac, cfg.seed, rho, trials, BTreeMap::from([("c".to_string(), c)])))
}

/// Trial count for the fault-tolerant 3-spanner rule: `⌈C1(2r+2) ln n⌉` for
/// edge faults and `⌈C1(r+2) ln n⌉` for vertex faults.
pub fn ft_3spanner_trials(n: usize, fault: &FaultModel, c1: f64) -> usize {
    let r = fault.r as f64;
    let factor = match fault.kind {
        FaultKind::Edge => 2.0 * r + 2.0,
        FaultKind::Vertex => r + 2.0,
    };
    ((c1 * factor * (n as f64).ln()).ceil() as usize).max(1)
}

pub fn round_3spanner_ft(g: &DiGraph, frac: &FractionalSolution, cfg: &RoundingConfig) -> Result<SpannerSolution, RoundingError> {
    check_common(g, frac, cfg)?;
    let Some(fault) = cfg.fault.filter(|f| f.r > 0) else {
        return round_3spanner(g, frac, cfg);
    };
    require_unit_k(g, cfg, 3.0, "3-spanner")?;
    let rho = cfg.c2 * (g.n() as f64).sqrt() * ln_n(g);
    let trials = cfg.trials.unwrap_or_else(|| ft_3spanner_trials(g.n(), &fault, cfg.c1));
    let params = BTreeMap::from([
        ("c1".to_string(), cfg.c1),
        ("c2".to_string(), cfg.c2),
        ("r".to_string(), fault.r as f64),
    ]);
    Ok(three_spanner_union(g, frac, cfg.seed, rho, trials, params))
}

/// Membership of each edge under `min{T_u, T_v} ≤ ρ x_uv` for one draw.
pub fn two_spanner_trial(g: &DiGraph, x: &[f64], rho: f64, seed: u64, trial: usize) -> Vec<bool> {
    let t = uniforms(seed, trial, T_DRAW, g.n());
    g.edges().iter().zip(x).map(|(e, &xe)| t[e.source].min(t[e.target]) <= rho * xe).collect()
}

fn two_spanner_with(g: &DiGraph, frac: &FractionalSolution, cfg: &RoundingConfig, rho: f64, mut params: BTreeMap<String, f64>) -> SpannerSolution {
    params.insert("rho".into(), rho);
    let mut col = Collector::new(g.m());
    for (e, keep) in two_spanner_trial(g, &frac.x, rho, cfg.seed, 0).into_iter().enumerate() {
        if keep {
            col.add(e, Tag::E1);
        }
    }
    col.finish(g, frac, cfg.seed, params)
}

/// Single threshold draw with `ρ = C ln n`, or `ρ = C ln Δ` in the
/// bounded-degree mode (Δ the largest in- or out-degree, at least 2).
pub fn round_2spanner(g: &DiGraph, frac: &FractionalSolution, cfg: &RoundingConfig) -> Result<SpannerSolution, RoundingError> {
    check_common(g, frac, cfg)?;
    if cfg.k != 2.0 {
        return Err(RoundingError::Precondition(format!("2-spanner rounding needs k=2, got {}", cfg.k)));
    }
    let c = cfg.c.unwrap_or(6.0);
    let rho = if cfg.mode == RoundingMode::TwoSpannerBoundedDegree {
        c * (g.max_degree().max(2) as f64).ln()
    } else {
        c * ln_n(g)
    };
    Ok(two_spanner_with(g, frac, cfg, rho, BTreeMap::from([("c".to_string(), c)])))
}

/// `ρ = C·r·ln n`.
pub fn round_2spanner_ft(g: &DiGraph, frac: &FractionalSolution, cfg: &RoundingConfig) -> Result<SpannerSolution, RoundingError> {
    check_common(g, frac, cfg)?;
    let Some(fault) = cfg.fault else {
        return round_2spanner(g, frac, cfg);
    };
    require_unit_k(g, cfg, 2.0, "2-spanner")?;
    let c = cfg.c.unwrap_or(6.0);
    let rho = c * fault.r.max(1) as f64 * ln_n(g);
    let params = BTreeMap::from([("c".to_string(), c), ("r".to_string(), fault.r as f64)]);
    Ok(two_spanner_with(g, frac, cfg, rho, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spanner_lp::{solve_lp_exact, SolveMode};

    fn frac_with(x: Vec<f64>) -> FractionalSolution {
        let objective = x.iter().sum();
        FractionalSolution { x, flows: Vec::new(), objective, mode: SolveMode::Exact, epsilon: 0.0, lower_bound: objective }
    }

    fn triangle() -> DiGraph {
        DiGraph::from_pairs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn threshold_on_triangle() {
        let g = triangle();
        let frac = solve_lp_exact(&g, 2.0, 10).unwrap();
        let thr = 1.0 / general_k_scale(3);
        assert!((thr - 1.0 / (9.0 * 3f64.ln()).powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((thr - 0.216).abs() < 2e-3);
        let cfg = RoundingConfig { k: 2.0, trials: Some(0), ..Default::default() };
        let sol = round_general_k(&g, &frac, &cfg).unwrap();
        assert_eq!(sol.edges, vec![0, 1]);
        assert!(sol.provenance.iter().all(|p| p.tag == "threshold"));
    }

    #[test]
    fn nothing_without_mass_or_rounds() {
        let g = triangle();
        let cfg = RoundingConfig { trials: Some(0), ..Default::default() };
        let sol = round_general_k(&g, &frac_with(vec![0.01; 3]), &cfg).unwrap();
        assert!(sol.edges.is_empty());
        assert_eq!(sol.size, 0);
    }

    #[test]
    fn full_capacity_always_kept() {
        let g = triangle();
        for seed in 0..20 {
            let cfg = RoundingConfig { seed, trials: Some(1), ..Default::default() };
            let sol = round_general_k(&g, &frac_with(vec![0.0, 0.0, 1.0]), &cfg).unwrap();
            assert!(sol.edges.contains(&2));
        }
    }

    #[test]
    fn rounding_is_deterministic() {
        let g = triangle();
        let frac = frac_with(vec![0.1, 0.2, 0.05]);
        let cfg = RoundingConfig { seed: 9, ..Default::default() };
        assert_eq!(round_general_k(&g, &frac, &cfg).unwrap(), round_general_k(&g, &frac, &cfg).unwrap());
    }

    #[test]
    fn failure_sampling_probability() {
        assert_eq!(failure_sampling_params(10, 3.0, 1).unwrap().p, 0.25);
        let fs = failure_sampling_params(10, 2.0, 1).unwrap();
        let expect_a = 2.0 * 4.0 * 27.0 * 10.0 * 10f64.ln() / 4.0;
        assert!((fs.a - expect_a).abs() < 1e-9 * expect_a);
        let ulps = (fs.t.to_bits() as i64 - fs.ell.to_bits() as i64).abs();
        assert!(ulps <= 1, "t={} ell={}", fs.t, fs.ell);
        assert!(matches!(failure_sampling_params(10, 200.0, 2), Err(RoundingError::ParameterOverflow { .. })));
    }

    #[test]
    fn balance_is_tight_across_scales() {
        for a in [1.5, 10.0, 123.456, 1e6, 7.7e12] {
            let t = balance(a);
            let ell = a / t.sqrt();
            assert!((t.to_bits() as i64 - ell.to_bits() as i64).abs() <= 1, "a={a}");
        }
    }

    #[test]
    fn three_spanner_rule() {
        // T_u small enough alone puts the edge in E1
        let (tu, tv, tpu, tpv) = (0.01f64, 0.9f64, 1.0f64, 1.0f64);
        let rho = 100.0;
        let x = 0.001;
        assert!(tu.min(tpu).min(tv.min(tpv)) <= rho * x);
        let g = DiGraph::from_pairs(2, &[(0, 1)]).unwrap();
        for trial in 0..50 {
            assert_eq!(three_spanner_trial(&g, &[0.01], 100.0, 3, trial)[0].0, true);
        }
    }

    #[test]
    fn ft_trial_counts() {
        let f = FaultModel::new(FaultKind::Edge, 1);
        assert_eq!(ft_3spanner_trials(16, &f, 1.0), (4.0 * 16f64.ln()).ceil() as usize);
        let v = FaultModel::new(FaultKind::Vertex, 1);
        assert_eq!(ft_3spanner_trials(16, &v, 1.0), (3.0 * 16f64.ln()).ceil() as usize);
    }

    #[test]
    fn two_spanner_rule_and_rho() {
        let g = triangle();
        let frac = frac_with(vec![0.5, 0.5, 0.0]);
        let cfg = RoundingConfig { k: 2.0, mode: RoundingMode::TwoSpanner, seed: 4, ..Default::default() };
        let sol = round_2spanner(&g, &frac, &cfg).unwrap();
        assert!(sol.edges.contains(&0) && sol.edges.contains(&1));
        assert!(!sol.edges.contains(&2));
        assert_eq!(sol.params["rho"], 6.0 * 3f64.ln());
        // r = 1 leaves the rule unchanged
        let ft = RoundingConfig { fault: Some(FaultModel::new(FaultKind::Vertex, 1)), ..cfg.clone() };
        assert_eq!(round_2spanner_ft(&g, &frac, &ft).unwrap().edges, sol.edges);
        let g20 = DiGraph::from_pairs(20, &[(0, 1)]).unwrap();
        let ft2 = RoundingConfig { fault: Some(FaultModel::new(FaultKind::Vertex, 2)), ..cfg };
        let s = round_2spanner_ft(&g20, &frac_with(vec![0.0]), &ft2).unwrap();
        assert_eq!(s.params["rho"], 6.0 * 2.0 * 20f64.ln());
    }

    #[test]
    fn json_shape() {
        let g = triangle();
        let cfg = RoundingConfig { k: 2.0, trials: Some(0), ..Default::default() };
        let sol = round_general_k(&g, &frac_with(vec![1.0, 1.0, 0.0]), &cfg).unwrap();
        let v: serde_json::Value = serde_json::from_str(&sol.to_json()).unwrap();
        assert_eq!(v["edges"], serde_json::json!([0, 1]));
        assert_eq!(v["provenance"][0]["tag"], "threshold");
        assert_eq!(SpannerSolution::from_json(&sol.to_json()).unwrap(), sol);
    }
}
