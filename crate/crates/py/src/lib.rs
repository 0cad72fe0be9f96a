//! Python bindings. Structured results cross the boundary as JSON strings,
//! which the caller decodes with `json.loads`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use spannerlab::graph::{parse_graph, write_graph, DiGraph, Edge, FaultKind, FaultModel, Mask};
use spannerlab::instances::{
    build_minrep_gap_instance, build_setcover_gap_instance, build_setcover_gap_with_aux, gen_random_digraph,
    gen_synthetic_minrep, GapInstance, LengthModel,
};
use spannerlab::pipeline::{check_gap, run_pipeline, GapCheckOptions, LpChoice, PipelineConfig};
use spannerlab::rounding::RoundingMode;
use spannerlab::rsp::{rsp_exact_hop, rsp_exact_labels, rsp_fptas, RspQuery};
use spannerlab::spanner_lp::{solve_lp_colgen, solve_lp_cutting, solve_lp_exact};
use spannerlab::verify::{brute_force_opt, verify_ft, verify_spanner};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Graph", module = "spannerlab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGraph {
    inner: DiGraph,
}

#[pymethods]
impl PyGraph {
    /// `edges` holds `(u, v)`, `(u, v, length)` or `(u, v, length, cost)` tuples.
    #[new]
    fn new(n: usize, edges: Vec<Vec<f64>>) -> PyResult<Self> {
        let mut list = Vec::with_capacity(edges.len());
        for e in edges {
            if e.len() < 2 || e.len() > 4 || e[0] < 0.0 || e[1] < 0.0 {
                return Err(err(format!("bad edge tuple {e:?}")));
            }
            list.push(Edge {
                source: e[0] as usize,
                target: e[1] as usize,
                length: e.get(2).copied().unwrap_or(1.0),
                cost: e.get(3).copied().unwrap_or(1.0),
            });
        }
        DiGraph::new(n, list).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        parse_graph(text).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, p, seed, lengths = None))]
    fn random(n: usize, p: f64, seed: u64, lengths: Option<(f64, f64)>) -> PyResult<Self> {
        let model = match lengths {
            Some((lo, hi)) => LengthModel::Uniform { lo, hi },
            None => LengthModel::Unit,
        };
        gen_random_digraph(n, p, model, seed).map(|inner| Self { inner }).map_err(err)
    }

    fn to_text(&self) -> String {
        write_graph(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    /// `(u, v, length, cost)` per edge, in id order.
    fn edges(&self) -> Vec<(usize, usize, f64, f64)> {
        self.inner.edges().iter().map(|e| (e.source, e.target, e.length, e.cost)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

fn fault_model(faults: Option<usize>, kind: &str) -> PyResult<Option<FaultModel>> {
    let kind: FaultKind = kind.parse().map_err(err)?;
    Ok(faults.map(|r| FaultModel::new(kind, r)))
}

/// Fractional solution JSON. `method` is `exact`, `colgen` or `cutting`;
/// by default `epsilon = 0` solves exactly and anything else by column generation.
#[pyfunction]
#[pyo3(signature = (graph, k, epsilon = 0.0, max_paths = 100_000, method = None))]
fn solve_lp(graph: &PyGraph, k: f64, epsilon: f64, max_paths: usize, method: Option<&str>) -> PyResult<String> {
    let method = method.unwrap_or(if epsilon == 0.0 { "exact" } else { "colgen" });
    let sol = match method {
        "exact" => solve_lp_exact(&graph.inner, k, max_paths),
        "colgen" => solve_lp_colgen(&graph.inner, k, epsilon),
        "cutting" => solve_lp_cutting(&graph.inner, k, epsilon),
        other => return Err(err(format!("unknown method `{other}`"))),
    };
    sol.map(|s| s.to_json()).map_err(err)
}

/// Runs solve, round and verify; returns the report JSON.
#[pyfunction]
#[pyo3(signature = (graph, k, algo = "general", seed = 0, epsilon = 0.1, faults = None, fault_kind = "vertex"))]
fn run(
    graph: &PyGraph,
    k: f64,
    algo: &str,
    seed: u64,
    epsilon: f64,
    faults: Option<usize>,
    fault_kind: &str,
) -> PyResult<String> {
    let mode = match algo {
        "general" => RoundingMode::GeneralK,
        "3spanner" => RoundingMode::ThreeSpanner,
        "2spanner" => RoundingMode::TwoSpanner,
        "2spanner-bd" => RoundingMode::TwoSpannerBoundedDegree,
        other => return Err(err(format!("unknown algo `{other}`"))),
    };
    let cfg = PipelineConfig {
        k,
        mode,
        epsilon,
        seed,
        fault: fault_model(faults, fault_kind)?,
        lp: LpChoice::Auto,
        ..PipelineConfig::default()
    };
    run_pipeline(&graph.inner, &cfg).map(|o| o.report.to_json()).map_err(err)
}

/// `(valid, realized stretch)`.
#[pyfunction]
#[pyo3(signature = (graph, k, edges, faults = None, fault_kind = "vertex"))]
fn verify(graph: &PyGraph, k: f64, edges: Vec<usize>, faults: Option<usize>, fault_kind: &str) -> PyResult<(bool, f64)> {
    if let Some(&e) = edges.iter().find(|&&e| e >= graph.inner.m()) {
        return Err(err(format!("edge {e} out of range")));
    }
    let report = match fault_model(faults, fault_kind)? {
        Some(f) => verify_ft(&graph.inner, k, &edges, &f).map_err(err)?,
        None => verify_spanner(&graph.inner, k, &edges),
    };
    Ok((report.valid, report.realized_stretch))
}

/// `(cost, witness edges)` of the cheapest spanner, for at most 14 edges.
#[pyfunction]
fn brute_force(graph: &PyGraph, k: f64) -> PyResult<(f64, Vec<usize>)> {
    brute_force_opt(&graph.inner, k, None).map(|r| (r.cost, r.witness)).map_err(err)
}

/// `(vertices, weight)` of a restricted shortest path; `epsilon = 0` is exact.
#[pyfunction]
#[pyo3(signature = (graph, source, target, budget, weights, epsilon = 0.0))]
fn rsp(
    graph: &PyGraph,
    source: usize,
    target: usize,
    budget: f64,
    weights: Vec<f64>,
    epsilon: f64,
) -> PyResult<(Vec<usize>, f64)> {
    let g = &graph.inner;
    if weights.len() != g.m() || source >= g.n() || target >= g.n() {
        return Err(err("weights must match the edge count and vertices must exist"));
    }
    let mask = Mask::new(g);
    let q = RspQuery { graph: g, source, target, budget, weights: &weights, forbidden: Some(&mask), epsilon };
    let res = if epsilon == 0.0 {
        if g.is_unit_length() { rsp_exact_hop(&q) } else { rsp_exact_labels(&q) }
            .ok_or_else(|| err(format!("no path from {source} to {target} meets the length budget")))?
    } else {
        rsp_fptas(&q).map_err(err)?
    };
    Ok((res.path.vertices, res.weight))
}

fn gap_tuple(gap: GapInstance) -> (PyGraph, String, String) {
    let meta = serde_json::to_string(&gap.meta).expect("metadata serializes");
    (PyGraph { inner: gap.graph }, gap.certificate.to_json(), meta)
}

/// `(graph, certificate JSON, metadata JSON)`.
#[pyfunction]
#[pyo3(signature = (r, q, k, seed = 0))]
fn minrep_gap(r: usize, q: usize, k: usize, seed: u64) -> PyResult<(PyGraph, String, String)> {
    let mr = gen_synthetic_minrep(r, q, seed).map_err(err)?;
    build_minrep_gap_instance(&mr, k).map(gap_tuple).map_err(err)
}

/// `(graph, certificate JSON, metadata JSON)`; `aux` defaults to 4^q.
#[pyfunction]
#[pyo3(signature = (q, aux = None))]
fn setcover_gap(q: usize, aux: Option<usize>) -> PyResult<(PyGraph, String, String)> {
    let gap = match aux {
        Some(a) => build_setcover_gap_with_aux(q, a),
        None => build_setcover_gap_instance(q),
    };
    gap.map(gap_tuple).map_err(err)
}

/// Gap-check report JSON for a graph, certificate capacities and metadata JSON.
#[pyfunction]
#[pyo3(signature = (graph, x, meta, brute_max_units = 20))]
fn gap_check(graph: &PyGraph, x: Vec<f64>, meta: &str, brute_max_units: usize) -> PyResult<String> {
    let meta = serde_json::from_str(meta).map_err(err)?;
    let opts = GapCheckOptions { brute_max_units, ..GapCheckOptions::default() };
    let report = check_gap(&graph.inner, &meta, &x, &opts).map_err(err)?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

#[pymodule]
fn spannerlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(solve_lp, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(rsp, m)?)?;
    m.add_function(wrap_pyfunction!(minrep_gap, m)?)?;
    m.add_function(wrap_pyfunction!(setcover_gap, m)?)?;
    m.add_function(wrap_pyfunction!(gap_check, m)?)?;
    Ok(())
}
