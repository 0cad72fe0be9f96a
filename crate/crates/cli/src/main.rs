mod args;
mod bench;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use spannerlab::graph::{parse_graph, write_graph, DiGraph, GraphError, Mask, ParseError};
use spannerlab::instances::{
    build_minrep_gap_instance, build_setcover_gap_instance, build_setcover_gap_with_aux, f2_set_system,
    gen_random_digraph, gen_synthetic_minrep, GapMeta, InstanceError, LengthModel, MinRepInstance,
};
use spannerlab::pipeline::{check_gap, run_pipeline, GapCheckOptions, PipelineConfig, PipelineError};
use spannerlab::rounding::{RoundingError, SpannerSolution};
use spannerlab::rsp::{rsp_exact_hop, rsp_exact_labels, rsp_fptas, RspError, RspQuery};
use spannerlab::spanner_lp::{FractionalSolution, SpannerLpError};
use spannerlab::verify::{
    brute_force_minrep, brute_force_opt_with, brute_force_setcover, verify_ft_with, verify_spanner, BruteForceOptions,
    VerifyError,
};

use args::{BruteKind, Cli, Command, Format, GenKind, Lengths};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Rsp(#[from] RspError),
    #[error("{0}")]
    Invalid(String),
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl From<SpannerLpError> for CliError {
    fn from(e: SpannerLpError) -> Self {
        CliError::Pipeline(e.into())
    }
}

fn graph_code(e: &GraphError) -> u8 {
    match e {
        GraphError::PathOverflow(_) => 6,
        GraphError::Unreachable(..) => 7,
        _ => 2,
    }
}

impl CliError {
    /// 0 ok, 1 invalid verdict, 2 usage, 3 I/O, 4 parse, 5 LP, 6 path
    /// overflow, 7 no feasible path, 8 fault budget, 9 certificate
    /// infeasible, 10 too large for brute force, 11 rounding.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Instance(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse { .. } => 4,
            CliError::Invalid(_) => 1,
            CliError::Rsp(RspError::NoFeasiblePath(..)) => 7,
            CliError::Rsp(_) => 2,
            CliError::Pipeline(p) => match p {
                PipelineError::Graph(g) => graph_code(g),
                PipelineError::Lp(SpannerLpError::Graph(g)) => graph_code(g),
                PipelineError::Lp(SpannerLpError::FaultBudgetTooLarge { .. }) => 8,
                PipelineError::Lp(SpannerLpError::InvalidEpsilon(_) | SpannerLpError::NotUnitLength) => 2,
                PipelineError::Lp(_) => 5,
                PipelineError::Rounding(RoundingError::InvalidConfig(_) | RoundingError::Precondition(_)) => 2,
                PipelineError::Rounding(_) => 11,
                PipelineError::Verify(VerifyError::FaultBudgetTooLarge { .. }) => 8,
                PipelineError::Verify(VerifyError::TooLarge { .. }) => 10,
                PipelineError::Verify(VerifyError::Infeasible(_)) => 1,
                PipelineError::CertificateInfeasible { .. } => 9,
                PipelineError::CertificateShape { .. } => 4,
            },
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            let res = stdout
                .write_all(text.as_bytes())
                .and_then(|_| if text.ends_with('\n') { Ok(()) } else { stdout.write_all(b"\n") });
            match res {
                // a closed reader (`| head`) is not our failure
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other.map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
            }
        }
    }
}

fn parse_err(path: &Path, msg: impl ToString) -> CliError {
    CliError::Parse { path: path.to_owned(), msg: msg.to_string() }
}

fn load_graph(path: &Path) -> Result<DiGraph> {
    let text = read(path)?;
    parse_graph(&text).map_err(|e: ParseError| parse_err(path, e))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

/// Flattens a JSON object into one CSV header and row; nested values are
/// written as compact JSON.
fn json_to_csv(value: &serde_json::Value) -> String {
    let mut keys = Vec::new();
    let mut vals = Vec::new();
    fn walk(prefix: &str, v: &serde_json::Value, keys: &mut Vec<String>, vals: &mut Vec<String>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, keys, vals);
                }
            }
            serde_json::Value::String(s) => {
                keys.push(prefix.to_string());
                vals.push(s.clone());
            }
            other => {
                keys.push(prefix.to_string());
                vals.push(other.to_string());
            }
        }
    }
    walk("", value, &mut keys, &mut vals);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&keys).expect("in-memory write");
    w.write_record(&vals).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn render<T: Serialize>(fmt: Format, v: &T) -> String {
    match fmt {
        Format::Json => to_json(v),
        Format::Csv => json_to_csv(&serde_json::to_value(v).expect("value serializes")),
    }
}

fn cmd_gen(kind: &GenKind) -> Result<u8> {
    match kind {
        GenKind::Random(a) => {
            let lengths = match a.lengths {
                Lengths::Unit => LengthModel::Unit,
                Lengths::Uniform => LengthModel::Uniform { lo: a.lo, hi: a.hi },
            };
            let g = gen_random_digraph(a.n, a.p, lengths, a.seed)?;
            emit(a.out.as_deref(), &write_graph(&g))?;
        }
        GenKind::SyntheticMinrep(a) => {
            let mr = gen_synthetic_minrep(a.r, a.q, a.seed)?;
            emit(a.out.as_deref(), &to_json(&mr))?;
        }
        GenKind::MinrepGap(a) => {
            let mr = if a.identity { MinRepInstance::identity(a.r, a.q)? } else { gen_synthetic_minrep(a.r, a.q, a.seed)? };
            let gap = build_minrep_gap_instance(&mr, a.k)?;
            write_gap(&a.out, &gap.graph, &gap.certificate, &gap.meta)?;
        }
        GenKind::SetcoverGap(a) => {
            let gap = match a.aux {
                Some(aux) => build_setcover_gap_with_aux(a.q, aux)?,
                None => build_setcover_gap_instance(a.q)?,
            };
            write_gap(&a.out, &gap.graph, &gap.certificate, &gap.meta)?;
        }
    }
    Ok(0)
}

fn write_gap(out: &Path, g: &DiGraph, cert: &FractionalSolution, meta: &GapMeta) -> Result<()> {
    write(out, &write_graph(g))?;
    write(&sidecar(out, ".cert.json"), &cert.to_json())?;
    write(&sidecar(out, ".gap.json"), &to_json(meta))
}

fn cmd_run(a: &args::RunArgs, fmt: Format) -> Result<u8> {
    let g = load_graph(&a.graph)?;
    let cfg = PipelineConfig {
        k: a.k.resolve(g.n()),
        mode: a.solve.algo.into(),
        epsilon: a.solve.epsilon,
        seed: a.seed,
        trials: a.solve.trials,
        c: a.solve.c,
        fault: a.fault.model(),
        lp: a.solve.lp.into(),
        max_paths: a.solve.max_paths,
        max_fault_sets: a.fault.max_fault_sets,
        brute_max_edges: a.brute_max_edges,
    };
    let out = run_pipeline(&g, &cfg)?;
    if let Some(p) = &a.spanner_out {
        write(p, &out.spanner.to_json())?;
    }
    if let Some(p) = &a.lp_out {
        write(p, &out.fractional.to_json())?;
    }
    emit(a.out.as_deref(), &render(fmt, &out.report))?;
    Ok(if out.report.verification.valid { 0 } else { 1 })
}

fn cmd_gap_check(a: &args::GapCheckArgs, fmt: Format) -> Result<u8> {
    let g = load_graph(&a.graph)?;
    let cert_path = a.cert.clone().unwrap_or_else(|| sidecar(&a.graph, ".cert.json"));
    let meta_path = a.meta.clone().unwrap_or_else(|| sidecar(&a.graph, ".gap.json"));
    let cert = FractionalSolution::from_json(&g, &read(&cert_path)?).map_err(|e| parse_err(&cert_path, e))?;
    let meta: GapMeta = serde_json::from_str(&read(&meta_path)?).map_err(|e| parse_err(&meta_path, e))?;
    let opts = GapCheckOptions { brute_max_units: a.brute_max_units, max_paths: a.max_paths };
    let report = check_gap(&g, &meta, &cert.x, &opts)?;
    emit(None, &render(fmt, &report))?;
    Ok(if report.within_bound { 0 } else { 1 })
}

fn read_weights(path: &Path, m: usize) -> Result<Vec<f64>> {
    let text = read(path)?;
    let w: Vec<f64> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| parse_err(path, e))?
    } else {
        text.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| parse_err(path, format!("bad weight `{t}`")))).collect::<Result<_>>()?
    };
    if w.len() != m {
        return Err(parse_err(path, format!("{} weights for {m} edges", w.len())));
    }
    Ok(w)
}

fn cmd_rsp(a: &args::RspArgs, fmt: Format) -> Result<u8> {
    let g = load_graph(&a.graph)?;
    if a.source >= g.n() || a.target >= g.n() {
        return Err(CliError::Usage(format!("vertices must be below {}", g.n())));
    }
    let weights = read_weights(&a.weights, g.m())?;
    let mask = Mask::new(&g);
    let q = RspQuery {
        graph: &g,
        source: a.source,
        target: a.target,
        budget: a.budget,
        weights: &weights,
        forbidden: Some(&mask),
        epsilon: a.epsilon,
    };
    let res = if a.epsilon == 0.0 {
        let found = if g.is_unit_length() { rsp_exact_hop(&q) } else { rsp_exact_labels(&q) };
        found.ok_or(RspError::NoFeasiblePath(a.source, a.target))?
    } else {
        rsp_fptas(&q)?
    };
    let doc = json!({
        "vertices": res.path.vertices,
        "edges": res.path.edges,
        "weight": res.weight,
        "length": res.path.length,
        "hops": res.path.hops(),
    });
    emit(None, &render(fmt, &doc))?;
    Ok(0)
}

fn read_edge_set(path: &Path, m: usize) -> Result<Vec<usize>> {
    let text = read(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    let edges: Vec<usize> = if v.is_array() {
        serde_json::from_value(v).map_err(|e| parse_err(path, e))?
    } else {
        SpannerSolution::from_json(&text).map_err(|e| parse_err(path, e))?.edges
    };
    if let Some(&e) = edges.iter().find(|&&e| e >= m) {
        return Err(parse_err(path, format!("edge {e} out of range")));
    }
    Ok(edges)
}

fn cmd_verify(a: &args::VerifyArgs, fmt: Format) -> Result<u8> {
    let g = load_graph(&a.graph)?;
    let edges = read_edge_set(&a.spanner, g.m())?;
    let k = a.k.resolve(g.n());
    let report = match a.fault.model() {
        Some(f) => verify_ft_with(&g, k, &edges, &f, a.fault.max_fault_sets)?,
        None => verify_spanner(&g, k, &edges),
    };
    emit(None, &render(fmt, &report))?;
    Ok(if report.valid { 0 } else { 1 })
}

#[derive(serde::Deserialize)]
struct SetSystem {
    elements: usize,
    sets: Vec<Vec<usize>>,
}

fn cmd_brute(kind: &BruteKind, fmt: Format) -> Result<u8> {
    let doc = match kind {
        BruteKind::Spanner(a) => {
            let g = load_graph(&a.graph)?;
            let opts = BruteForceOptions {
                max_units: a.max_edges,
                groups: None,
                max_fault_sets: a.fault.max_fault_sets,
            };
            let r = brute_force_opt_with(&g, a.k.resolve(g.n()), a.fault.model().as_ref(), &opts)?;
            serde_json::to_value(r).expect("result serializes")
        }
        BruteKind::Minrep { file } => {
            let mr: MinRepInstance = serde_json::from_str(&read(file)?).map_err(|e| parse_err(file, e))?;
            json!({ "opt": brute_force_minrep(&mr)? })
        }
        BruteKind::Setcover { q, file } => {
            let (n, sets) = match (q, file) {
                (Some(q), _) => f2_set_system(*q),
                (None, Some(f)) => {
                    let s: SetSystem = serde_json::from_str(&read(f)?).map_err(|e| parse_err(f, e))?;
                    (s.elements, s.sets)
                }
                (None, None) => return Err(CliError::Usage("give --q or --file".into())),
            };
            if sets.iter().flatten().any(|&e| e >= n) {
                return Err(CliError::Usage("set element out of range".into()));
            }
            json!({ "opt": brute_force_setcover(n, &sets)? })
        }
    };
    emit(None, &render(fmt, &doc))?;
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Gen { kind } => cmd_gen(kind),
        Command::Run(a) => cmd_run(a, cli.format),
        Command::GapCheck(a) => cmd_gap_check(a, cli.format),
        Command::Bench(a) => bench::cmd_bench(a, cli.format),
        Command::Rsp(a) => cmd_rsp(a, cli.format),
        Command::Verify(a) => cmd_verify(a, cli.format),
        Command::Brute { kind } => cmd_brute(kind, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.show_config {
        return match emit(None, &to_json(&cli)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => ExitCode::from(e.exit_code()),
        };
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
