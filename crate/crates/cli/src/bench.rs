//! Seeded benchmark suite: one row per (size, density, k, seed), rows in
//! input order whatever order the workers finish in.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use spannerlab::instances::{gen_random_digraph, LengthModel};
use spannerlab::pipeline::{solve, PipelineConfig, PipelineError};
use spannerlab::rounding::{round, RoundingConfig};
use spannerlab::verify::{verify_ft_with, verify_spanner};

use crate::args::{BenchArgs, Format, Lengths};
use crate::{emit, CliError};

#[derive(Clone, Debug)]
struct Job {
    n: usize,
    p: f64,
    k: f64,
    k_label: String,
    seed: u64,
}

#[derive(Clone, Debug, Default, serde::Serialize)]
struct Row {
    n: usize,
    p: f64,
    k: String,
    seed: u64,
    algo: String,
    m: Option<usize>,
    lp_mode: Option<String>,
    lp_objective: Option<f64>,
    lp_lower_bound: Option<f64>,
    spanner_size: Option<f64>,
    spanner_cost: Option<f64>,
    ratio_vs_lp: Option<f64>,
    valid_runs: Option<usize>,
    runs: usize,
    validity_rate: Option<f64>,
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    solve_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    round_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify_ms: Option<f64>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn run_job(job: &Job, a: &BenchArgs) -> Row {
    let mut row = Row {
        n: job.n,
        p: job.p,
        k: job.k_label.clone(),
        seed: job.seed,
        algo: serde_json::to_value(a.solve.algo).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        runs: a.repeats,
        ..Row::default()
    };
    let lengths = match a.lengths {
        Lengths::Unit => LengthModel::Unit,
        Lengths::Uniform => LengthModel::Uniform { lo: 1.0, hi: 10.0 },
    };
    let result = (|| -> Result<(), CliError> {
        let g = gen_random_digraph(job.n, job.p, lengths, job.seed)?;
        row.m = Some(g.m());
        let cfg = PipelineConfig {
            k: job.k,
            mode: a.solve.algo.into(),
            epsilon: a.solve.epsilon,
            seed: job.seed,
            trials: a.solve.trials,
            c: a.solve.c,
            fault: a.fault.model(),
            lp: a.solve.lp.into(),
            max_paths: a.solve.max_paths,
            max_fault_sets: a.fault.max_fault_sets,
            brute_max_edges: 0,
        };
        let t = Instant::now();
        let frac = solve(&g, &cfg)?;
        let solve_ms = ms(t);
        row.lp_mode = serde_json::to_value(frac.mode).ok().and_then(|v| v.as_str().map(String::from));
        row.lp_objective = Some(frac.objective);
        row.lp_lower_bound = Some(frac.lower_bound);
        let (mut round_ms, mut verify_ms) = (0.0, 0.0);
        let (mut valid, mut size, mut cost) = (0usize, 0.0, 0.0);
        for rep in 0..a.repeats {
            let rcfg = RoundingConfig {
                k: cfg.k,
                seed: job.seed.wrapping_mul(1_000_003).wrapping_add(rep as u64),
                trials: cfg.trials,
                c: cfg.c,
                epsilon: cfg.epsilon.max(f64::MIN_POSITIVE),
                fault: cfg.fault,
                mode: cfg.mode,
                ..RoundingConfig::default()
            };
            let t = Instant::now();
            let sol = round(&g, &frac, &rcfg).map_err(PipelineError::from)?;
            round_ms += ms(t);
            let t = Instant::now();
            let ok = match cfg.fault {
                Some(f) => verify_ft_with(&g, cfg.k, &sol.edges, &f, cfg.max_fault_sets)?.valid,
                None => verify_spanner(&g, cfg.k, &sol.edges).valid,
            };
            verify_ms += ms(t);
            valid += usize::from(ok);
            size += sol.size as f64;
            cost += sol.cost;
        }
        let reps = a.repeats.max(1) as f64;
        row.spanner_size = Some(size / reps);
        row.spanner_cost = Some(cost / reps);
        row.ratio_vs_lp = (frac.lower_bound > 0.0).then(|| cost / reps / frac.lower_bound);
        row.valid_runs = Some(valid);
        row.validity_rate = Some(valid as f64 / reps);
        if !a.no_timings {
            row.solve_ms = Some(solve_ms);
            row.round_ms = Some(round_ms);
            row.verify_ms = Some(verify_ms);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = e.to_string();
    }
    row
}

pub fn cmd_bench(a: &BenchArgs, fmt: Format) -> Result<u8, CliError> {
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be positive".into()));
    }
    let mut jobs = Vec::new();
    for &n in &a.sizes {
        for &p in &a.densities {
            for &k in &a.ks {
                for s in 0..a.seeds {
                    jobs.push(Job { n, p, k: k.resolve(n), k_label: k.to_string(), seed: a.seed_base + s });
                }
            }
        }
    }
    let threads = a
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, jobs.len().max(1));
    let slots: Vec<Mutex<Option<Row>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let row = run_job(job, a);
                *slots[i].lock().expect("slot lock") = Some(row);
            });
        }
    });
    let rows: Vec<Row> = slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every job ran")).collect();
    let failed = rows.iter().any(|r| !r.error.is_empty());
    let text = match fmt {
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(|e| CliError::Invalid(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))?).expect("csv is utf-8")
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(if failed { 1 } else { 0 })
}
