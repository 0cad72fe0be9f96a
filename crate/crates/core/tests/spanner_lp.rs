//! Properties of the spanner relaxation solvers on small random digraphs.

use proptest::prelude::*;

use spannerlab::graph::{bottleneck_capacity, enumerate_stretch_paths, support_set, DiGraph, FaultKind, FaultModel};
use spannerlab::instances::{gen_random_digraph, LengthModel};
use spannerlab::spanner_lp::{
    check_fractional_feasibility, solve_ft_lp, solve_lp_colgen, solve_lp_cutting, solve_lp_exact, FractionalSolution,
};
use spannerlab::verify::brute_force_opt;

fn small_graph() -> impl Strategy<Value = DiGraph> {
    graphs(any::<bool>())
}

fn graphs(unit: impl Strategy<Value = bool>) -> impl Strategy<Value = DiGraph> {
    (3usize..=6, 0.2f64..0.6, any::<u64>(), unit).prop_filter_map("edges", |(n, p, seed, unit)| {
        let lengths = if unit { LengthModel::Unit } else { LengthModel::Uniform { lo: 1.0, hi: 5.0 } };
        let g = gen_random_digraph(n, p, lengths, seed).ok()?;
        (g.m() > 0 && g.m() <= 12).then_some(g)
    })
}

fn stretch() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(5.0)]
}

fn tol(v: f64) -> f64 {
    1e-6 * v.abs().max(1.0)
}

fn assert_feasible(g: &DiGraph, k: f64, sol: &FractionalSolution) {
    assert!(check_fractional_feasibility(g, k, &sol.x).unwrap().is_feasible());
    sol.check_decomposition(g, k, None).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn exact_is_a_lower_bound_on_brute_force(g in small_graph(), k in stretch()) {
        let lp = solve_lp_exact(&g, k, 100_000).unwrap();
        let opt = brute_force_opt(&g, k, None).unwrap();
        prop_assert!(lp.objective <= opt.cost + 1e-6);
        assert_feasible(&g, k, &lp);
        prop_assert!(lp.lower_bound <= lp.objective + tol(lp.objective));
    }

    #[test]
    fn exact_optimum_has_a_wide_path(g in small_graph(), k in stretch()) {
        let lp = solve_lp_exact(&g, k, 100_000).unwrap();
        for e in g.edges() {
            let d = (e.source, e.target);
            let n_uv = support_set(&g, d, k).support_vertices.len() as f64;
            prop_assert!(bottleneck_capacity(&g, d, k, &lp.x, None) >= 1.0 / (n_uv * n_uv) - 1e-9);
        }
    }

    #[test]
    fn colgen_within_epsilon(g in small_graph(), k in stretch(), eps in prop_oneof![Just(0.01), Just(0.1), Just(0.5)]) {
        let exact = solve_lp_exact(&g, k, 100_000).unwrap();
        let cg = solve_lp_colgen(&g, k, eps).unwrap();
        prop_assert!(cg.objective <= (1.0 + eps) * exact.objective + tol(exact.objective));
        prop_assert!(cg.objective >= exact.objective - tol(exact.objective));
        prop_assert!(cg.lower_bound <= exact.objective + tol(exact.objective));
        assert_feasible(&g, k, &cg);
    }

    #[test]
    fn cutting_planes_reach_the_exact_value(g in small_graph(), k in stretch()) {
        let exact = solve_lp_exact(&g, k, 100_000).unwrap();
        let cut = solve_lp_cutting(&g, k, 0.0).unwrap();
        prop_assert!((cut.objective - exact.objective).abs() <= tol(exact.objective), "{} vs {}", cut.objective, exact.objective);
        assert_feasible(&g, k, &cut);
    }

    #[test]
    fn zero_faults_is_the_plain_relaxation(g in graphs(Just(true)), k in stretch()) {
        let exact = solve_lp_exact(&g, k, 100_000).unwrap();
        let ft = solve_ft_lp(&g, k, FaultModel::new(FaultKind::Vertex, 0), 0.0).unwrap();
        prop_assert!((ft.objective - exact.objective).abs() <= tol(exact.objective));
    }

    #[test]
    fn json_round_trip(g in small_graph(), k in stretch()) {
        let lp = solve_lp_exact(&g, k, 100_000).unwrap();
        let back = FractionalSolution::from_json(&g, &lp.to_json()).unwrap();
        prop_assert_eq!(back.x, lp.x);
        prop_assert_eq!(back.objective, lp.objective);
    }
}

#[test]
fn enumerated_paths_respect_the_budget() {
    let g = gen_random_digraph(7, 0.4, LengthModel::Uniform { lo: 1.0, hi: 3.0 }, 11).unwrap();
    for e in g.edges() {
        let ctx = support_set(&g, (e.source, e.target), 2.0);
        for p in enumerate_stretch_paths(&g, (e.source, e.target), 2.0, 100_000).unwrap() {
            let len: f64 = p.edges.iter().map(|&f| g.edge(f).length).sum();
            assert!(len <= ctx.stretch_budget + 1e-9);
            assert!(p.is_simple());
            assert!(p.vertices.iter().all(|v| ctx.support_vertices.contains(v)));
        }
    }
}

#[test]
fn fault_tolerant_lp_dominates_plain() {
    let g = gen_random_digraph(6, 0.5, LengthModel::Unit, 3).unwrap();
    let plain = solve_lp_exact(&g, 3.0, 100_000).unwrap();
    let ft = solve_ft_lp(&g, 3.0, FaultModel::new(FaultKind::Vertex, 1), 0.0).unwrap();
    assert!(ft.objective >= plain.objective - 1e-6);
    ft.check_decomposition(&g, 3.0, Some(&FaultModel::new(FaultKind::Vertex, 1))).unwrap();
}
