use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spannerlab::graph::{FaultKind, FaultModel};
use spannerlab::pipeline::LpChoice;
use spannerlab::rounding::RoundingMode;

#[derive(Parser, Debug, Serialize)]
#[command(name = "spannerlab", version, about = "LP relaxations and randomized rounding for directed spanners")]
pub struct Cli {
    /// Print the resolved configuration (flags, env, defaults) as JSON and exit.
    #[arg(long, global = true)]
    pub show_config: bool,
    /// Output format for reports.
    #[arg(long, global = true, value_enum, env = "SPANNERLAB_FORMAT", default_value = "json")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Generate instances.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Solve, round and verify one graph.
    Run(RunArgs),
    /// Validate a gap instance's certificate and measure the gap when small.
    GapCheck(GapCheckArgs),
    /// Run a seeded benchmark suite and emit one row per instance.
    Bench(BenchArgs),
    /// Restricted shortest path between two vertices.
    Rsp(RspArgs),
    /// Check a spanner against its graph.
    Verify(VerifyArgs),
    /// Exhaustive optimum of tiny instances.
    Brute {
        #[command(subcommand)]
        kind: BruteKind,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GenKind {
    /// Random digraph with independent edges.
    Random(GenRandomArgs),
    /// Matching Min-Rep instance (JSON).
    SyntheticMinrep(GenMinrepArgs),
    /// Min-Rep gap instance with certificate sidecars.
    MinrepGap(GenMinrepGapArgs),
    /// Set-cover gap instance with certificate sidecars.
    SetcoverGap(GenSetcoverGapArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Lengths {
    Unit,
    Uniform,
}

#[derive(Args, Debug, Serialize)]
pub struct GenRandomArgs {
    #[arg(long, env = "SPANNERLAB_N")]
    pub n: usize,
    #[arg(long, env = "SPANNERLAB_P")]
    pub p: f64,
    #[arg(long, env = "SPANNERLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, env = "SPANNERLAB_LENGTHS", default_value = "unit")]
    pub lengths: Lengths,
    #[arg(long, default_value_t = 1.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 10.0)]
    pub hi: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GenMinrepArgs {
    #[arg(long, env = "SPANNERLAB_R")]
    pub r: usize,
    #[arg(long, env = "SPANNERLAB_Q")]
    pub q: usize,
    #[arg(long, env = "SPANNERLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GenMinrepGapArgs {
    #[arg(long, env = "SPANNERLAB_R")]
    pub r: usize,
    #[arg(long, env = "SPANNERLAB_Q")]
    pub q: usize,
    #[arg(long, env = "SPANNERLAB_K")]
    pub k: usize,
    /// Seed of the matchings.
    #[arg(long, env = "SPANNERLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Use identity matchings instead of seeded ones.
    #[arg(long)]
    pub identity: bool,
    /// Graph file; sidecars go to `<out>.cert.json` and `<out>.gap.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct GenSetcoverGapArgs {
    #[arg(long, env = "SPANNERLAB_Q")]
    pub q: usize,
    /// Number of auxiliary vertices; 4^q when absent.
    #[arg(long)]
    pub aux: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// A stretch factor, or `log` for the natural log of the vertex count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stretch {
    Value(f64),
    LogN,
}

impl Stretch {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Stretch::Value(k) => k,
            Stretch::LogN => (n as f64).ln(),
        }
    }
}

impl FromStr for Stretch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log" | "logn" => Ok(Stretch::LogN),
            _ => s.parse::<f64>().map(Stretch::Value).map_err(|_| format!("expected a number or `log`, got `{s}`")),
        }
    }
}

impl fmt::Display for Stretch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stretch::Value(k) => write!(f, "{k}"),
            Stretch::LogN => f.write_str("log"),
        }
    }
}

impl Serialize for Stretch {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Stretch::Value(k) => s.serialize_f64(*k),
            Stretch::LogN => s.serialize_str("log"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Algo {
    #[serde(rename = "general")]
    General,
    #[value(name = "3spanner")]
    #[serde(rename = "3spanner")]
    ThreeSpanner,
    #[value(name = "2spanner")]
    #[serde(rename = "2spanner")]
    TwoSpanner,
    #[value(name = "2spanner-bd")]
    #[serde(rename = "2spanner-bd")]
    TwoSpannerBd,
}

impl From<Algo> for RoundingMode {
    fn from(a: Algo) -> Self {
        match a {
            Algo::General => RoundingMode::GeneralK,
            Algo::ThreeSpanner => RoundingMode::ThreeSpanner,
            Algo::TwoSpanner => RoundingMode::TwoSpanner,
            Algo::TwoSpannerBd => RoundingMode::TwoSpannerBoundedDegree,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpArg {
    Auto,
    Exact,
    Colgen,
    Cutting,
}

impl From<LpArg> for LpChoice {
    fn from(a: LpArg) -> Self {
        match a {
            LpArg::Auto => LpChoice::Auto,
            LpArg::Exact => LpChoice::Exact,
            LpArg::Colgen => LpChoice::Colgen,
            LpArg::Cutting => LpChoice::Cutting,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultKindArg {
    Vertex,
    Edge,
}

#[derive(Args, Debug, Serialize)]
pub struct FaultArgs {
    /// Fault budget r; enables fault-tolerant solving and verification.
    #[arg(long, env = "SPANNERLAB_FAULTS")]
    pub faults: Option<usize>,
    #[arg(long, value_enum, env = "SPANNERLAB_FAULT_KIND", default_value = "vertex")]
    pub fault_kind: FaultKindArg,
    /// Cap on enumerated fault sets.
    #[arg(long, env = "SPANNERLAB_MAX_FAULT_SETS", default_value_t = 5_000)]
    pub max_fault_sets: usize,
}

impl FaultArgs {
    pub fn model(&self) -> Option<FaultModel> {
        let kind = match self.fault_kind {
            FaultKindArg::Vertex => FaultKind::Vertex,
            FaultKindArg::Edge => FaultKind::Edge,
        };
        self.faults.map(|r| FaultModel::new(kind, r))
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SolveArgs {
    #[arg(long, value_enum, env = "SPANNERLAB_ALGO", default_value = "general")]
    pub algo: Algo,
    #[arg(long, env = "SPANNERLAB_EPSILON", default_value_t = 0.1)]
    pub epsilon: f64,
    /// Rounds or trials of the rounding rule; its own default when absent.
    #[arg(long, env = "SPANNERLAB_TRIALS")]
    pub trials: Option<usize>,
    /// Inflation constant of the 3- and 2-spanner rules.
    #[arg(long, env = "SPANNERLAB_C")]
    pub c: Option<f64>,
    #[arg(long, value_enum, env = "SPANNERLAB_LP", default_value = "auto")]
    pub lp: LpArg,
    /// Path budget under which the relaxation is solved exactly.
    #[arg(long, env = "SPANNERLAB_MAX_PATHS", default_value_t = 100_000)]
    pub max_paths: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct RunArgs {
    pub graph: PathBuf,
    #[arg(long, env = "SPANNERLAB_K", default_value = "3")]
    pub k: Stretch,
    #[arg(long, env = "SPANNERLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub fault: FaultArgs,
    /// Also brute-force the optimum when the graph has at most this many edges.
    #[arg(long, env = "SPANNERLAB_BRUTE_MAX_EDGES", default_value_t = 0)]
    pub brute_max_edges: usize,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the spanner solution JSON here.
    #[arg(long)]
    pub spanner_out: Option<PathBuf>,
    /// Write the fractional solution JSON here.
    #[arg(long)]
    pub lp_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GapCheckArgs {
    pub graph: PathBuf,
    /// Certificate file; `<graph>.cert.json` when absent.
    #[arg(long)]
    pub cert: Option<PathBuf>,
    /// Gap metadata; `<graph>.gap.json` when absent.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Brute-force the integral optimum up to this many edge groups.
    #[arg(long, env = "SPANNERLAB_BRUTE_MAX_UNITS", default_value_t = 20)]
    pub brute_max_units: usize,
    #[arg(long, env = "SPANNERLAB_MAX_PATHS", default_value_t = 100_000)]
    pub max_paths: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    /// Vertex counts, comma separated.
    #[arg(long, value_delimiter = ',', env = "SPANNERLAB_SIZES", default_value = "20,30,40")]
    pub sizes: Vec<usize>,
    /// Edge probabilities, comma separated.
    #[arg(long, value_delimiter = ',', env = "SPANNERLAB_DENSITIES", default_value = "0.15")]
    pub densities: Vec<f64>,
    /// Stretch values (numbers or `log`), comma separated.
    #[arg(long, value_delimiter = ',', env = "SPANNERLAB_KS", default_value = "3,4")]
    pub ks: Vec<Stretch>,
    /// Instance seeds per configuration.
    #[arg(long, env = "SPANNERLAB_SEEDS", default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, env = "SPANNERLAB_SEED", default_value_t = 0)]
    pub seed_base: u64,
    /// Rounding repetitions per instance; the validity rate is over these.
    #[arg(long, env = "SPANNERLAB_REPEATS", default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, value_enum, env = "SPANNERLAB_LENGTHS", default_value = "unit")]
    pub lengths: Lengths,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub fault: FaultArgs,
    /// Drop the wall-time columns.
    #[arg(long)]
    pub no_timings: bool,
    /// Worker threads; all available cores when absent.
    #[arg(long, env = "SPANNERLAB_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct RspArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub source: usize,
    #[arg(long)]
    pub target: usize,
    /// Length budget of the path.
    #[arg(long)]
    pub budget: f64,
    /// Edge weights in edge order, whitespace separated or a JSON array.
    #[arg(long)]
    pub weights: PathBuf,
    /// Approximation parameter; 0 solves exactly.
    #[arg(long, env = "SPANNERLAB_EPSILON", default_value_t = 0.0)]
    pub epsilon: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    pub graph: PathBuf,
    /// Spanner solution JSON, or a JSON array of edge ids.
    #[arg(long)]
    pub spanner: PathBuf,
    #[arg(long, env = "SPANNERLAB_K", default_value = "3")]
    pub k: Stretch,
    #[command(flatten)]
    pub fault: FaultArgs,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BruteKind {
    /// Minimum-cost spanner by subset enumeration.
    Spanner(BruteSpannerArgs),
    /// Min-Rep optimum of a synthetic instance file.
    Minrep { file: PathBuf },
    /// Minimum set cover of the F_2^q system, or of a JSON {"elements":N,"sets":[[..]]} file.
    Setcover {
        #[arg(long, conflicts_with = "file")]
        q: Option<usize>,
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct BruteSpannerArgs {
    pub graph: PathBuf,
    #[arg(long, env = "SPANNERLAB_K", default_value = "3")]
    pub k: Stretch,
    #[command(flatten)]
    pub fault: FaultArgs,
    #[arg(long, env = "SPANNERLAB_BRUTE_MAX_EDGES", default_value_t = 14)]
    pub max_edges: usize,
}
