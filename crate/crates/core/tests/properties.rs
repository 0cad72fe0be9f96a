//! Cross-module invariants: restricted shortest paths against path
//! enumeration, verification, generators, gap certificates and rounding.

use proptest::prelude::*;

use spannerlab::graph::{parse_graph, write_graph, DiGraph, FaultKind, FaultModel, Mask};
use spannerlab::instances::{
    build_minrep_gap_instance, build_setcover_gap_with_aux, gen_random_digraph, gen_synthetic_minrep, LengthModel,
};
use spannerlab::pipeline::{check_gap, GapCheckOptions};
use spannerlab::rounding::{round, RoundingConfig, RoundingMode};
use spannerlab::rsp::{rsp_exact_hop, rsp_exact_labels, rsp_fptas, RspQuery};
use spannerlab::spanner_lp::{check_fractional_feasibility, solve_lp_exact};
use spannerlab::verify::{brute_force_opt, verify_ft, verify_spanner};

fn graph(max_n: usize, unit: bool) -> impl Strategy<Value = DiGraph> {
    (2usize..=max_n, 0.2f64..0.7, any::<u64>()).prop_map(move |(n, p, seed)| {
        let lengths = if unit { LengthModel::Unit } else { LengthModel::Uniform { lo: 1.0, hi: 6.0 } };
        gen_random_digraph(n, p, lengths, seed).unwrap()
    })
}

/// Every simple `s`-`t` path as `(length, weight)`.
fn all_paths(g: &DiGraph, s: usize, t: usize, w: &[f64]) -> Vec<(f64, f64)> {
    fn dfs(g: &DiGraph, v: usize, t: usize, w: &[f64], seen: &mut Vec<bool>, acc: (f64, f64), out: &mut Vec<(f64, f64)>) {
        if v == t {
            out.push(acc);
            return;
        }
        for &e in g.out_edges(v) {
            let u = g.edge(e).target;
            if !seen[u] {
                seen[u] = true;
                dfs(g, u, t, w, seen, (acc.0 + g.edge(e).length, acc.1 + w[e]), out);
                seen[u] = false;
            }
        }
    }
    let mut seen = vec![false; g.n()];
    seen[s] = true;
    let mut out = Vec::new();
    dfs(g, s, t, w, &mut seen, (0.0, 0.0), &mut out);
    out
}

fn rsp_case() -> impl Strategy<Value = (DiGraph, Vec<f64>, usize, usize, f64)> {
    (any::<bool>(), 0.0f64..1.0).prop_flat_map(|(unit, frac)| {
        graph(7, unit).prop_flat_map(move |g| {
            let (n, m) = (g.n(), g.m());
            (Just(g), prop::collection::vec(0.0f64..10.0, m), 0..n, 0..n, Just(frac))
        })
    })
    .prop_map(|(g, w, s, t, frac)| {
        let budget = if g.is_unit_length() { 1.0 + (frac * 5.0).floor() } else { 2.0 + frac * 20.0 };
        (g, w, s, t, budget)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exact_rsp_matches_enumeration((g, w, s, t, budget) in rsp_case()) {
        prop_assume!(s != t);
        let best = all_paths(&g, s, t, &w)
            .into_iter()
            .filter(|(len, _)| *len <= budget + 1e-9)
            .map(|(_, wt)| wt)
            .fold(f64::INFINITY, f64::min);
        let q = RspQuery { graph: &g, source: s, target: t, budget, weights: &w, forbidden: None, epsilon: 0.0 };
        let got = if g.is_unit_length() { rsp_exact_hop(&q) } else { rsp_exact_labels(&q) };
        match got {
            None => prop_assert!(best.is_infinite()),
            Some(r) => {
                prop_assert!((r.weight - best).abs() <= 1e-9 * best.max(1.0));
                let len: f64 = r.path.edges.iter().map(|&e| g.edge(e).length).sum();
                prop_assert!(len <= budget + 1e-9);
                prop_assert!(r.path.is_simple());
                prop_assert_eq!((r.path.source(), r.path.target()), (s, t));
            }
        }
    }

    #[test]
    fn fptas_within_factor((g, w, s, t, budget) in rsp_case(), eps in prop_oneof![Just(0.05), Just(0.2), Just(1.0)]) {
        prop_assume!(s != t);
        let exact = RspQuery { graph: &g, source: s, target: t, budget, weights: &w, forbidden: None, epsilon: 0.0 };
        let opt = if g.is_unit_length() { rsp_exact_hop(&exact) } else { rsp_exact_labels(&exact) };
        let q = RspQuery { epsilon: eps, ..exact };
        match (opt, rsp_fptas(&q)) {
            (None, r) => prop_assert!(r.is_err()),
            (Some(o), Ok(r)) => {
                prop_assert!(r.weight <= (1.0 + eps) * o.weight + 1e-9);
                let len: f64 = r.path.edges.iter().map(|&e| g.edge(e).length).sum();
                prop_assert!(len <= budget + 1e-9);
            }
            (Some(_), Err(e)) => prop_assert!(false, "fptas failed: {e}"),
        }
    }

    #[test]
    fn forbidden_elements_are_avoided((g, w, s, t, budget) in rsp_case(), drop in any::<prop::sample::Index>()) {
        prop_assume!(s != t && g.n() > 2);
        let v = drop.index(g.n());
        prop_assume!(v != s && v != t);
        let mut mask = Mask::new(&g);
        mask.remove_vertex(&g, v);
        let q = RspQuery { graph: &g, source: s, target: t, budget, weights: &w, forbidden: Some(&mask), epsilon: 0.0 };
        let got = if g.is_unit_length() { rsp_exact_hop(&q) } else { rsp_exact_labels(&q) };
        if let Some(r) = got {
            prop_assert!(!r.path.vertices.contains(&v));
        }
    }

    #[test]
    fn zero_faults_verify_like_plain(g in graph(6, true), keep in prop::collection::vec(any::<bool>(), 0..40), k in 1.0f64..4.0) {
        let set: Vec<usize> = (0..g.m()).filter(|&e| keep.get(e).copied().unwrap_or(true)).collect();
        for kind in [FaultKind::Vertex, FaultKind::Edge] {
            let ft = verify_ft(&g, k, &set, &FaultModel::new(kind, 0)).unwrap();
            prop_assert_eq!(ft, verify_spanner(&g, k, &set));
        }
    }

    #[test]
    fn brute_force_witness_is_valid(g in graph(5, false), k in 1.0f64..3.0) {
        prop_assume!(g.m() <= 12);
        let opt = brute_force_opt(&g, k, None).unwrap();
        prop_assert!(verify_spanner(&g, k, &opt.witness).valid);
        prop_assert!((g.cost_of(&opt.witness) - opt.cost).abs() < 1e-9);
        prop_assert_eq!(opt.size, opt.witness.len());
    }

    #[test]
    fn generator_is_deterministic(n in 2usize..30, p in 0.0f64..1.0, seed in any::<u64>(), unit in any::<bool>()) {
        let lengths = if unit { LengthModel::Unit } else { LengthModel::Uniform { lo: 1.0, hi: 10.0 } };
        let a = gen_random_digraph(n, p, lengths, seed).unwrap();
        let b = gen_random_digraph(n, p, lengths, seed).unwrap();
        prop_assert_eq!(write_graph(&a), write_graph(&b));
        prop_assert_eq!(write_graph(&parse_graph(&write_graph(&a)).unwrap()), write_graph(&a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn minrep_certificates_are_feasible(r in prop_oneof![Just(2usize), Just(4)], q in 2usize..=4, k in prop_oneof![Just(3usize), Just(5)], seed in any::<u64>()) {
        let mr = gen_synthetic_minrep(r, q, seed).unwrap();
        let gap = build_minrep_gap_instance(&mr, k).unwrap();
        prop_assert!(check_fractional_feasibility(&gap.graph, k as f64, &gap.certificate.x).unwrap().is_feasible());
        gap.certificate.check_decomposition(&gap.graph, k as f64, None).unwrap();
        let opts = GapCheckOptions { brute_max_units: 0, ..GapCheckOptions::default() };
        let report = check_gap(&gap.graph, &gap.meta, &gap.certificate.x, &opts).unwrap();
        prop_assert!(report.certificate_feasible && report.within_bound);
    }

    #[test]
    fn rounding_is_deterministic(g in graph(8, true), seed in any::<u64>(), mode in 0usize..3) {
        let (k, mode) = match mode {
            0 => (3.0, RoundingMode::GeneralK),
            1 => (3.0, RoundingMode::ThreeSpanner),
            _ => (2.0, RoundingMode::TwoSpanner),
        };
        let frac = solve_lp_exact(&g, k, 100_000).unwrap();
        let cfg = RoundingConfig { k, seed, mode, ..RoundingConfig::default() };
        let a = round(&g, &frac, &cfg).unwrap();
        let b = round(&g, &frac, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.edges.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((g.cost_of(&a.edges) - a.cost).abs() < 1e-9);
    }
}

#[test]
fn setcover_certificate_with_small_aux() {
    for q in 2..=3 {
        let gap = build_setcover_gap_with_aux(q, 2).unwrap();
        let report = check_gap(&gap.graph, &gap.meta, &gap.certificate.x, &GapCheckOptions { brute_max_units: 0, ..Default::default() }).unwrap();
        assert!(report.certificate_feasible && report.within_bound);
    }
}
