// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line frontend. Every table and figure command writes CSV whose
//! first line is a `# manifest:` comment with the seed, version and
//! parameters, and a JSON manifest with per-point details next to it.
//!
//! Exit codes: 0 success, 2 invalid input, 3 runtime abort.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analytic::{self, InfiniteMemoryMethod, Magnitude, SeriesTolerance};
use crate::error::{Error, Result};
use crate::model::{LinkModel, MemoryPolicy, Topology, DEFAULT_ATTENUATION_PER_KM};
use crate::montecarlo::{self, CoinMode, ReplicaPlan, TRIAL_CAP};
use crate::oracle::{self, LatticeKind};
use crate::thresholds::{self, CutoffEstimator, PCritConfig, PCritMethod};
use crate::topology::{self, EdgeListOptions, Pyramid};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "repnet", version, about = "Elementary-link generation in repeater networks: closed forms, exact chains and simulation")]
pub struct Cli {
    /// Text file of `key=value` lines supplying any flag; flags given on the
    /// command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a closed-form quantity.
    Analytic(AnalyticArgs),
    /// Monte Carlo estimate of one quantity on one network.
    Simulate(SimulateArgs),
    /// Minimum cutoffs within a tolerance of the infinite-memory optimum.
    /// Columns: p,M,n_star_min
    Table1(Table1Args),
    /// Minimum total chain length at which repeaters beat direct transmission.
    /// Columns: M,L_min_km
    Table2(Table2Args),
    /// Critical link probability on square and triangular lattices.
    /// Columns: lattice,n_star,p_crit,std_error
    Table3(Table3Args),
    /// Average connection time in seconds against link length.
    /// Columns: M,n_star,length_km,p,mean_trials,mean_seconds,std_error_seconds,replicas,method
    Fig1b(Fig1bArgs),
    /// Best repeater rate and repeaterless capacity against total length.
    /// Columns: L_km,M,p,rate,capacity
    Fig3(Fig3Args),
    /// Pyramid connection times: by layer count (b), bottom position (c), cutoff (d).
    /// Columns: panel,layers,position,n_star,mean_trials,std_error,replicas
    Fig4(Fig4Args),
    /// Average fraction of live links after n trials.
    /// Columns: p,n,n_star,mean_fraction,std_error,replicas,exact_fraction
    Fig5(Fig5Args),
    /// Average largest-cluster fraction on lattices after n trials.
    /// Columns: lattice,n_star,p,mean_fraction,std_error,replicas,cluster_share,cluster_share_std_error
    Fig6(Fig6Args),
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// CSV destination; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// JSON manifest destination; defaults to `<output>.manifest.json` when
    /// --output is a file.
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
struct ReplayArgs {
    #[arg(long, default_value_t = 2026)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "REPNET_WORKERS")]
    workers: Option<usize>,
}

impl ReplayArgs {
    fn plan(&self, replicas: u64) -> ReplicaPlan {
        ReplicaPlan::new(replicas, self.seed).with_workers(self.workers.unwrap_or_else(montecarlo::default_workers))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Quantity {
    /// Expected trials without memory, 1/p^M.
    TrialsNoMem,
    /// Expected trials with unlimited memory.
    TrialsInfMem,
    /// Distribution of the connection trial with unlimited memory (with
    /// --paths, over parallel paths).
    Pmf,
    /// Expected trials over --paths parallel paths, cutoff 0 or inf.
    Parallel,
    /// Repeaterless capacity -log2(1 - eta).
    Capacity,
    /// Best repeater rate 1 / (2 E[N(M, inf)]).
    Rate,
    /// Expected live-link fraction after n trials while n <= n* + 1.
    Fraction,
    /// Fewest trials that can reach live-link fraction f.
    MinTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SeriesMethod {
    Series,
    Alternating,
}

#[derive(Args, Debug)]
struct AnalyticArgs {
    #[arg(long, value_enum)]
    quantity: Quantity,
    #[arg(long)]
    p: Option<f64>,
    /// Number of links.
    #[arg(long = "M")]
    m: Option<u32>,
    /// Trial index.
    #[arg(long)]
    n: Option<u64>,
    /// Largest trial listed by --quantity pmf.
    #[arg(long, default_value_t = 20)]
    n_max: u64,
    #[arg(long, value_parser = parse_policy)]
    cutoff: Option<MemoryPolicy>,
    #[arg(long)]
    paths: Option<u32>,
    #[arg(long)]
    eta: Option<f64>,
    /// Target live-link fraction.
    #[arg(long)]
    f: Option<f64>,
    #[arg(long, value_enum, default_value_t = SeriesMethod::Series)]
    method: SeriesMethod,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopologyKind {
    Square,
    Triangular,
    Pyramid,
    Chain,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Measure {
    /// Trials until every link is live.
    #[value(name = "N")]
    N,
    /// Trials until --a and --b are connected by live links.
    #[value(name = "N-ab")]
    NAb,
    /// Live links after --trials trials, as a fraction of all links.
    #[value(name = "L")]
    L,
    /// Largest cluster after --trials trials, as a fraction of all links.
    #[value(name = "S")]
    S,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    topology: TopologyKind,
    /// Side of square and triangular lattices.
    #[arg(long, default_value_t = 10)]
    size: usize,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Pyramid layers.
    #[arg(long, default_value_t = 5)]
    layers: usize,
    /// Chain links.
    #[arg(long, default_value_t = 2)]
    links: usize,
    /// Edge-list file for --topology file.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
    #[arg(long, conflicts_with = "length_km")]
    p: Option<f64>,
    /// Elementary link length; the probability follows from attenuation.
    #[arg(long)]
    length_km: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ATTENUATION_PER_KM)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    extra_loss: f64,
    #[arg(long, default_value_t = 1)]
    n_par: u32,
    #[arg(long, value_parser = parse_policy, default_value = "inf")]
    cutoff: MemoryPolicy,
    /// Observation trial for --measure L and S.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    measure: Measure,
    /// Node id, `apex`, `bottom-center` or `bottom:X` (pyramids).
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    replicas: u64,
    #[arg(long, default_value_t = TRIAL_CAP)]
    trial_cap: u64,
    #[command(flatten)]
    replay: ReplayArgs,
    /// Write the network as an edge list.
    #[arg(long, value_name = "PATH")]
    dump_edges: Option<PathBuf>,
    /// Write per-replica values as `replica,seed,value` CSV.
    #[arg(long, value_name = "PATH")]
    samples: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorKind {
    Mc,
    Oracle,
}

#[derive(Args, Debug)]
struct Table1Args {
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.03, 0.05, 0.1, 0.3, 0.5])]
    p: Vec<f64>,
    #[arg(long = "M", value_delimiter = ',', default_values_t = vec![10u32, 20])]
    m: Vec<u32>,
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    #[arg(long, value_enum, default_value_t = EstimatorKind::Mc)]
    estimator: EstimatorKind,
    /// Replicas per cutoff probe.
    #[arg(long, default_value_t = 10_000)]
    replicas: u64,
    /// Ceiling for replica doubling on undecided probes; defaults to 8x --replicas.
    #[arg(long)]
    max_replicas: Option<u64>,
    #[command(flatten)]
    replay: ReplayArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct Table2Args {
    #[arg(long = "M", value_delimiter = ',', default_values_t = vec![2u32, 3, 4, 5, 10])]
    m: Vec<u32>,
    #[arg(long, default_value_t = DEFAULT_ATTENUATION_PER_KM)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    resolution_km: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LatticeChoice {
    Square,
    Triangular,
    All,
}

impl LatticeChoice {
    fn kinds(self) -> Vec<LatticeKind> {
        match self {
            LatticeChoice::Square => vec![LatticeKind::Square],
            LatticeChoice::Triangular => vec![LatticeKind::Triangular],
            LatticeChoice::All => vec![LatticeKind::Square, LatticeKind::Triangular],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PCritChoice {
    Logistic,
    SemiAnalytic,
}

#[derive(Args, Debug)]
struct Table3Args {
    #[arg(long, value_enum, default_value_t = LatticeChoice::All)]
    lattice: LatticeChoice,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0u64, 1, 2, 3, 4])]
    cutoff: Vec<u64>,
    /// Lattice side length.
    #[arg(long, default_value_t = 200)]
    scale: usize,
    #[arg(long, default_value_t = 10)]
    n: u64,
    #[arg(long, value_enum, default_value_t = PCritChoice::Logistic)]
    method: PCritChoice,
    /// Replicas per refined sweep point (a quarter of this per coarse point).
    #[arg(long, default_value_t = 8)]
    replicas: u64,
    /// Also write every sweep point as `lattice,n_star,p,mean_fraction,std_error,replicas`.
    #[arg(long, value_name = "PATH")]
    sweep_csv: Option<PathBuf>,
    #[command(flatten)]
    replay: ReplayArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct Fig1bArgs {
    #[arg(long = "M", value_delimiter = ',', default_values_t = vec![5u32, 10])]
    m: Vec<u32>,
    #[arg(long, value_delimiter = ',', value_parser = parse_policy, default_values = ["0", "1", "2", "5", "10", "inf"])]
    cutoff: Vec<MemoryPolicy>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0])]
    length_km: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_ATTENUATION_PER_KM)]
    alpha: f64,
    /// Replicas per simulated point (finite nonzero cutoffs).
    #[arg(long, default_value_t = 1000)]
    replicas: u64,
    #[command(flatten)]
    replay: ReplayArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct Fig3Args {
    #[arg(long = "M", value_delimiter = ',', default_values_t = vec![2u32, 3, 4, 5, 10])]
    m: Vec<u32>,
    #[arg(long, default_value_t = 150)]
    l_max_km: u32,
    #[arg(long, default_value_t = DEFAULT_ATTENUATION_PER_KM)]
    alpha: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Panel {
    B,
    C,
    D,
    All,
}

#[derive(Args, Debug)]
struct Fig4Args {
    #[arg(long, value_enum, default_value_t = Panel::All)]
    panel: Panel,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![3usize, 4, 5, 6, 7, 8])]
    layers: Vec<usize>,
    /// Cutoff for panels b and c.
    #[arg(long, default_value_t = 2)]
    cutoff: u64,
    /// Layers for panel d.
    #[arg(long, value_delimiter = ',', default_values_t = vec![3usize, 5, 7])]
    sweep_layers: Vec<usize>,
    /// Cutoffs for panel d.
    #[arg(long, value_delimiter = ',', value_parser = parse_policy,
          default_values = ["1", "2", "3", "4", "5", "6", "8", "10", "15", "20", "30", "50", "inf"])]
    sweep_cutoffs: Vec<MemoryPolicy>,
    #[arg(long, default_value_t = 2000)]
    replicas: u64,
    #[command(flatten)]
    replay: ReplayArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct Fig5Args {
    #[arg(long = "M", default_value_t = 40)]
    m: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![10u64, 20, 30])]
    n: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 4, 6, 8])]
    cutoff: Vec<u64>,
    /// Link probabilities; defaults to 0.05, 0.10, ..., 0.95.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    replicas: u64,
    #[command(flatten)]
    replay: ReplayArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct Fig6Args {
    #[arg(long, value_enum, default_value_t = LatticeChoice::All)]
    lattice: LatticeChoice,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0u64, 1, 2, 3, 4])]
    cutoff: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    scale: usize,
    #[arg(long, default_value_t = 10)]
    n: u64,
    #[arg(long, default_value_t = 41)]
    grid_points: usize,
    #[arg(long, default_value_t = 4)]
    replicas: u64,
    #[command(flatten)]
    replay: ReplayArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_policy(s: &str) -> std::result::Result<MemoryPolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_SUCCESS };
        }
    };
    let stdout = io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => EXIT_SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Expands `--config PATH` into flags placed right after the subcommand,
/// skipping keys the command line already sets.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            config = Some(PathBuf::from(iter.next().ok_or_else(|| Error::invalid("config", "missing path"))?));
        } else if let Some(path) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)?;
    let given: Vec<String> = rest
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected key=value, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if given.iter().any(|g| g == key) {
            continue;
        }
        match value {
            "true" => injected.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => injected.push(OsString::from(format!("--{key}={value}"))),
        }
    }
    // The subcommand is the first bare word after the program name.
    let position = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(rest.len(), |p| p + 2);
    rest.splice(position..position, injected);
    Ok(rest)
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Analytic(a) => run_analytic(&a, stdout),
        Command::Simulate(a) => run_simulate(&a, stdout),
        Command::Table1(a) => run_table1(&a, stdout),
        Command::Table2(a) => run_table2(&a, stdout),
        Command::Table3(a) => run_table3(&a, stdout),
        Command::Fig1b(a) => run_fig1b(&a, stdout),
        Command::Fig3(a) => run_fig3(&a, stdout),
        Command::Fig4(a) => run_fig4(&a, stdout),
        Command::Fig5(a) => run_fig5(&a, stdout),
        Command::Fig6(a) => run_fig6(&a, stdout),
    }
}

/// Shortest decimal form for scalars: six decimals, trailing zeros trimmed.
fn format_scalar(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v != 0.0 && (v.abs() >= 1e7 || v.abs() < 1e-4) {
        return format!("{v:.6e}");
    }
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

fn format_magnitude(m: Magnitude) -> String {
    if m.is_representable() {
        return format_scalar(m.value());
    }
    let exponent = m.log10.floor();
    format!("{:.6}e{}", 10f64.powf(m.log10 - exponent), exponent as i64)
}

#[derive(Serialize)]
struct AnalyticOutput {
    quantity: &'static str,
    formula: &'static str,
    parameters: serde_json::Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log10: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<Vec<(u64, f64)>>,
    #[serde(skip)]
    display: String,
}

fn required<T: Copy>(value: Option<T>, name: &'static str, quantity: &str) -> Result<T> {
    value.ok_or_else(|| Error::invalid(name, format!("required for --quantity {quantity}")))
}

fn run_analytic(args: &AnalyticArgs, out: &mut dyn Write) -> Result<()> {
    let name = args.quantity.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let q = name.as_str();
    let mut params = serde_json::Map::new();
    let mut record = |k: &str, v: Value| {
        params.insert(k.to_string(), v);
    };
    let tol = SeriesTolerance::default();
    let (formula, value, log10, tail, table): (&'static str, Option<f64>, Option<f64>, Option<f64>, Option<Vec<(u64, f64)>>) =
        match args.quantity {
            Quantity::TrialsNoMem => {
                let (p, m) = (required(args.p, "p", q)?, required(args.m, "M", q)?);
                record("p", json!(p));
                record("M", json!(m));
                let e = analytic::expected_trials_no_memory(p, m)?;
                ("1/p^M", e.is_representable().then(|| e.value()), Some(e.log10), None, None)
            }
            Quantity::TrialsInfMem => {
                let (p, m) = (required(args.p, "p", q)?, required(args.m, "M", q)?);
                record("p", json!(p));
                record("M", json!(m));
                match args.method {
                    SeriesMethod::Series => {
                        let s = analytic::expected_trials_infinite_memory_series(p, m, tol)?;
                        ("sum_{n>=1} [1 - (1 - (1-p)^(n-1))^M]", Some(s.value), None, Some(s.tail_bound), None)
                    }
                    SeriesMethod::Alternating => {
                        let v = analytic::expected_trials_infinite_memory(p, m, InfiniteMemoryMethod::AlternatingSum)?;
                        ("sum_{k=1}^M C(M,k) (-1)^(k+1) / (1 - (1-p)^k)", Some(v), None, None, None)
                    }
                }
            }
            Quantity::Pmf => {
                let (p, m) = (required(args.p, "p", q)?, required(args.m, "M", q)?);
                record("p", json!(p));
                record("M", json!(m));
                record("n_max", json!(args.n_max));
                let rows = match args.paths {
                    None => {
                        let probs = analytic::pmf_trials_infinite_memory_range(p, m, 1..=args.n_max)?;
                        (1..=args.n_max).zip(probs).collect()
                    }
                    Some(paths) => {
                        record("paths", json!(paths));
                        (1..=args.n_max)
                            .map(|n| analytic::pmf_trials_parallel_infinite(p, m, paths, n).map(|v| (n, v)))
                            .collect::<Result<Vec<_>>>()?
                    }
                };
                let formula = if args.paths.is_some() {
                    "Pr[N=n] over parallel paths with unlimited memory"
                } else {
                    "(1 - (1-p)^n)^M - (1 - (1-p)^(n-1))^M"
                };
                (formula, None, None, None, Some(rows))
            }
            Quantity::Parallel => {
                let (p, m) = (required(args.p, "p", q)?, required(args.m, "M", q)?);
                let paths = required(args.paths, "paths", q)?;
                let cutoff = args.cutoff.unwrap_or(MemoryPolicy::Infinite);
                record("p", json!(p));
                record("M", json!(m));
                record("paths", json!(paths));
                record("cutoff", json!(cutoff.to_string()));
                match cutoff {
                    MemoryPolicy::Finite(0) => {
                        let e = analytic::expected_trials_parallel_no_memory(p, m, paths)?;
                        ("1 / (1 - (1 - p^M)^paths)", e.is_representable().then(|| e.value()), Some(e.log10), None, None)
                    }
                    MemoryPolicy::Infinite => {
                        let s = analytic::expected_trials_parallel_infinite_series(p, m, paths, tol)?;
                        ("sum_{n>=1} (1 - (1 - (1-p)^(n-1))^M)^paths", Some(s.value), None, Some(s.tail_bound), None)
                    }
                    MemoryPolicy::Finite(_) => {
                        return Err(Error::OutOfDomain {
                            what: "closed-form parallel-path trials",
                            requirement: "cutoff 0 or inf".into(),
                            alternative: "`simulate --measure N-ab`",
                        })
                    }
                }
            }
            Quantity::Capacity => {
                let eta = required(args.eta, "eta", q)?;
                record("eta", json!(eta));
                ("-log2(1 - eta)", Some(analytic::repeaterless_capacity(eta)?), None, None, None)
            }
            Quantity::Rate => {
                let (p, m) = (required(args.p, "p", q)?, required(args.m, "M", q)?);
                record("p", json!(p));
                record("M", json!(m));
                ("1 / (2 E[N(M, inf)])", Some(analytic::achievable_rate_infinite_cutoff(p, m)?), None, None, None)
            }
            Quantity::Fraction => {
                let (p, n) = (required(args.p, "p", q)?, required(args.n, "n", q)?);
                let cutoff = args.cutoff.unwrap_or(MemoryPolicy::Infinite);
                record("p", json!(p));
                record("n", json!(n));
                record("cutoff", json!(cutoff.to_string()));
                ("1 - (1-p)^n", Some(analytic::expected_link_fraction_exact(p, n, cutoff)?), None, None, None)
            }
            Quantity::MinTrials => {
                let (f, p) = (required(args.f, "f", q)?, required(args.p, "p", q)?);
                record("f", json!(f));
                record("p", json!(p));
                let n = analytic::min_trials_for_fraction(f, p)?;
                ("ceil(log(1-f) / log(1-p))", Some(n as f64), None, None, None)
            }
        };
    let display = match (value, log10) {
        (Some(v), _) => format_scalar(v),
        (None, Some(l)) => format_magnitude(Magnitude { log10: l }),
        _ => String::new(),
    };
    let output = AnalyticOutput {
        quantity: match args.quantity {
            Quantity::TrialsNoMem => "trials-no-mem",
            Quantity::TrialsInfMem => "trials-inf-mem",
            Quantity::Pmf => "pmf",
            Quantity::Parallel => "parallel",
            Quantity::Capacity => "capacity",
            Quantity::Rate => "rate",
            Quantity::Fraction => "fraction",
            Quantity::MinTrials => "min-trials",
        },
        formula,
        parameters: params,
        value: value.filter(|v| v.is_finite()),
        log10,
        tail_bound: tail,
        table,
        display,
    };
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &output).map_err(io::Error::other)?;
        writeln!(out)?;
        return Ok(());
    }
    writeln!(out, "# formula: {}", output.formula)?;
    let params: Vec<String> = output.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(out, "# parameters: {}", params.join(" "))?;
    if let Some(t) = output.tail_bound {
        writeln!(out, "# tail_bound: {t:e}")?;
    }
    if let Some(l) = output.log10 {
        writeln!(out, "# log10: {}", format_scalar(l))?;
    }
    if let Some(rows) = &output.table {
        let mut w = csv::Writer::from_writer(&mut *out);
        w.write_record(["n", "probability"]).map_err(io::Error::other)?;
        for (n, v) in rows {
            w.write_record([n.to_string(), format!("{v:e}")]).map_err(io::Error::other)?;
        }
        w.flush()?;
    } else if args.csv {
        writeln!(out, "quantity,value")?;
        writeln!(out, "{},{}", output.quantity, output.display)?;
    } else {
        writeln!(out, "{}", output.display)?;
    }
    Ok(())
}

/// CSV output with a manifest comment line, flushed row by row, plus the
/// JSON manifest written on success and on failure alike.
struct Report<'a> {
    csv: csv::Writer<Box<dyn Write + 'a>>,
    manifest_path: Option<PathBuf>,
    header: Value,
    points: Vec<Value>,
    started: Instant,
}

impl<'a> Report<'a> {
    fn open(command: &str, parameters: Value, seed: Option<u64>, output: &OutputArgs, columns: &[&str], stdout: &'a mut dyn Write) -> Result<Self> {
        let mut sink: Box<dyn Write + 'a> = match &output.output {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(stdout),
        };
        let mut header = json!({
            "command": command,
            "version": VERSION,
            "parameters": parameters,
        });
        if let Some(seed) = seed {
            header["seed"] = json!(seed);
        }
        writeln!(sink, "# manifest: {header}")?;
        let mut csv = csv::Writer::from_writer(sink);
        csv.write_record(columns).map_err(io::Error::other)?;
        csv.flush()?;
        let manifest_path = output
            .manifest
            .clone()
            .or_else(|| output.output.as_ref().map(|p| manifest_path_for(p)));
        Ok(Report {
            csv,
            manifest_path,
            header,
            points: Vec::new(),
            started: Instant::now(),
        })
    }

    fn row(&mut self, fields: &[String], details: Value) -> Result<()> {
        self.csv.write_record(fields).map_err(io::Error::other)?;
        self.csv.flush()?;
        self.points.push(details);
        Ok(())
    }

    fn finish(mut self, outcome: Result<()>) -> Result<()> {
        self.csv.flush()?;
        if let Some(path) = &self.manifest_path {
            let mut manifest = self.header.clone();
            manifest["status"] = json!(if outcome.is_ok() { "ok" } else { "failed" });
            if let Err(e) = &outcome {
                manifest["error"] = json!(e.to_string());
            }
            manifest["runtime_seconds"] = json!(self.started.elapsed().as_secs_f64());
            manifest["points"] = Value::Array(std::mem::take(&mut self.points));
            let file = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(file, &manifest).map_err(io::Error::other)?;
        }
        outcome
    }
}

fn manifest_path_for(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn with_report<'a>(
    command: &str,
    parameters: Value,
    seed: Option<u64>,
    output: &OutputArgs,
    columns: &[&str],
    stdout: &'a mut dyn Write,
    body: impl FnOnce(&mut Report<'a>) -> Result<()>,
) -> Result<()> {
    let mut report = Report::open(command, parameters, seed, output, columns, stdout)?;
    let outcome = body(&mut report);
    report.finish(outcome)
}

struct Network {
    topology: Topology,
    links: LinkModel,
    pyramid: Option<Pyramid>,
    label: String,
}

fn build_network(args: &SimulateArgs) -> Result<Network> {
    let options = EdgeListOptions {
        alpha: args.alpha,
        extra_loss: args.extra_loss,
        n_par: args.n_par,
    };
    let (topology, pyramid, label) = match args.topology {
        TopologyKind::File => {
            let path = args.file.as_ref().ok_or_else(|| Error::invalid("file", "required for --topology file"))?;
            if args.p.is_some() || args.length_km.is_some() {
                return Err(Error::invalid("p", "edge-list files carry their own link parameters"));
            }
            let (topology, links) = topology::load_edge_list(path, &options)?;
            return Ok(Network {
                topology,
                links,
                pyramid: None,
                label: format!("file:{}", path.display()),
            });
        }
        TopologyKind::Square | TopologyKind::Triangular => {
            let (w, h) = (args.width.unwrap_or(args.size), args.height.unwrap_or(args.size));
            let t = if args.topology == TopologyKind::Square {
                topology::square_lattice(w, h)?
            } else {
                topology::triangular_lattice(w, h)?
            };
            let name = if args.topology == TopologyKind::Square { "square" } else { "triangular" };
            (t, None, format!("{name}:{w}x{h}"))
        }
        TopologyKind::Pyramid => {
            let pyramid = Pyramid::new(args.layers)?;
            (pyramid.topology(), Some(pyramid), format!("pyramid:{}", args.layers))
        }
        TopologyKind::Chain => (topology::chain(args.links)?, None, format!("chain:{}", args.links)),
    };
    let p = match (args.p, args.length_km) {
        (Some(p), None) => {
            crate::error::check_probability("p", p)?;
            if args.n_par > 1 {
                -(f64::from(args.n_par) * (-p).ln_1p()).exp_m1()
            } else {
                p
            }
        }
        (None, Some(len)) => crate::model::effective_probability(len, args.alpha, args.extra_loss, args.n_par)?,
        _ => return Err(Error::invalid("p", "give exactly one of --p and --length-km")),
    };
    Ok(Network {
        links: LinkModel::homogeneous(topology.edge_count(), p)?,
        topology,
        pyramid,
        label,
    })
}

fn resolve_node(selector: &str, network: &Network) -> Result<usize> {
    let pyramid = || network.pyramid.ok_or_else(|| Error::invalid("a/b", format!("`{selector}` applies to pyramids only")));
    match selector {
        "apex" => Ok(pyramid()?.apex()),
        "bottom-center" => Ok(pyramid()?.bottom_center()),
        s => {
            if let Some(x) = s.strip_prefix("bottom:") {
                let x = x.parse().map_err(|_| Error::invalid("a/b", format!("bad bottom position `{x}`")))?;
                return pyramid()?.bottom(x);
            }
            let id: usize = s.parse().map_err(|_| Error::invalid("a/b", format!("unknown node selector `{s}`")))?;
            if id >= network.topology.node_count() {
                return Err(Error::invalid("a/b", format!("node {id} not in topology")));
            }
            Ok(id)
        }
    }
}

fn run_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let network = build_network(args)?;
    if let Some(path) = &args.dump_edges {
        std::fs::write(path, topology::format_edge_list(&network.topology, &network.links))?;
    }
    let endpoints = match args.measure {
        Measure::NAb => {
            let (Some(a), Some(b)) = (&args.a, &args.b) else {
                return Err(Error::invalid("a/b", "--measure N-ab requires --a and --b"));
            };
            Some((resolve_node(a, &network)?, resolve_node(b, &network)?))
        }
        _ => None,
    };
    let observe = match args.measure {
        Measure::L | Measure::S => Some(args.trials.ok_or_else(|| Error::invalid("trials", "--measure L and S require --trials"))?),
        _ => None,
    };
    let plan = args.replay.plan(args.replicas);
    let (topo, links, cutoff, cap) = (&network.topology, &network.links, args.cutoff, args.trial_cap);
    let all_edges = topo.all_edge_indices();
    let m = topo.edge_count() as f64;
    let sampler = |rng: &mut montecarlo::ReplicaRng| -> Result<f64> {
        match args.measure {
            Measure::N => montecarlo::sample_connection_trials_with(topo, &all_edges, links, cutoff, CoinMode::Lazy, cap, rng).map(|n| n as f64),
            Measure::NAb => {
                let (a, b) = endpoints.expect("resolved above");
                montecarlo::sample_pair_connection_trials_with(topo, a, b, links, cutoff, cap, rng).map(|n| n as f64)
            }
            Measure::L => montecarlo::sample_link_count(links, cutoff, observe.expect("checked"), rng).map(|l| l as f64 / m),
            Measure::S => montecarlo::sample_largest_cluster(topo, links, cutoff, observe.expect("checked"), rng).map(|c| c.largest as f64 / m),
        }
    };
    let started = Instant::now();
    let (result, samples) = montecarlo::estimate_with_samples(sampler, &plan)?;
    if let Some(path) = &args.samples {
        montecarlo::write_samples_csv(BufWriter::new(File::create(path)?), &samples)?;
    }
    let p_label = links
        .homogeneous_probability()
        .map_or_else(|_| "mixed".to_string(), |p| p.to_string());
    let measure = args.measure.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let record = json!({
        "topology": network.label,
        "nodes": topo.node_count(),
        "links": topo.edge_count(),
        "p": p_label,
        "cutoff": cutoff.to_string(),
        "measure": measure,
        "trials": observe,
        "a": endpoints.map(|e| e.0),
        "b": endpoints.map(|e| e.1),
        "mean": result.mean,
        "std_error": result.std_error,
        "ci_low": result.ci_95.0,
        "ci_high": result.ci_95.1,
        "replicas": result.sample_count,
        "seed": plan.base_seed,
        "runtime_seconds": started.elapsed().as_secs_f64(),
    });
    if args.json {
        serde_json::to_writer_pretty(&mut *stdout, &record).map_err(io::Error::other)?;
        writeln!(stdout)?;
        return Ok(());
    }
    let columns = [
        "topology", "nodes", "links", "p", "cutoff", "measure", "trials", "a", "b", "mean", "std_error", "ci_low", "ci_high", "replicas", "seed",
    ];
    let fields: Vec<String> = columns
        .iter()
        .map(|c| match &record[*c] {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            v => v.to_string(),
        })
        .collect();
    let params = json!({
        "topology": network.label, "p": record["p"], "cutoff": cutoff.to_string(), "measure": measure,
        "trials": observe, "a": args.a, "b": args.b, "replicas": args.replicas, "trial_cap": args.trial_cap,
    });
    with_report("simulate", params, Some(plan.base_seed), &args.output, &columns, stdout, |r| r.row(&fields, record))
}

fn run_table1(args: &Table1Args, stdout: &mut dyn Write) -> Result<()> {
    let plan = args.replay.plan(args.replicas);
    let estimator = match args.estimator {
        EstimatorKind::Oracle => CutoffEstimator::Oracle,
        EstimatorKind::Mc => CutoffEstimator::MonteCarlo {
            plan,
            max_replicas: args.max_replicas.unwrap_or(8 * args.replicas),
        },
    };
    let params = json!({
        "p": args.p, "M": args.m, "tolerance": args.tolerance,
        "estimator": format!("{:?}", args.estimator).to_lowercase(),
        "replicas": args.replicas, "max_replicas": args.max_replicas,
    });
    with_report("table1", params, Some(plan.base_seed), &args.output, &["p", "M", "n_star_min"], stdout, |r| {
        for &m in &args.m {
            for &p in &args.p {
                let started = Instant::now();
                let search = thresholds::find_min_cutoff(p, m, args.tolerance, estimator)?;
                let details = json!({
                    "p": p, "M": m, "n_star_min": search.n_star_min,
                    "optimal_trials": search.optimal_trials,
                    "threshold_trials": search.threshold_trials,
                    "confidence": search.confidence_statement(),
                    "probes": search.probes,
                    "runtime_seconds": started.elapsed().as_secs_f64(),
                });
                r.row(&[p.to_string(), m.to_string(), search.n_star_min.to_string()], details)?;
            }
        }
        Ok(())
    })
}

fn run_table2(args: &Table2Args, stdout: &mut dyn Write) -> Result<()> {
    let params = json!({"M": args.m, "alpha": args.alpha, "resolution_km": args.resolution_km});
    with_report("table2", params, None, &args.output, &["M", "L_min_km"], stdout, |r| {
        for &m in &args.m {
            let t = thresholds::find_min_chain_length(m, args.alpha, args.resolution_km)?;
            r.row(&[m.to_string(), t.l_min_km.to_string()], json!(t))?;
        }
        Ok(())
    })
}

fn run_table3(args: &Table3Args, stdout: &mut dyn Write) -> Result<()> {
    let plan = args.replay.plan(args.replicas);
    let method = match args.method {
        PCritChoice::Logistic => PCritMethod::LogisticFit,
        PCritChoice::SemiAnalytic => PCritMethod::SemiAnalytic,
    };
    let params = json!({
        "lattice": format!("{:?}", args.lattice).to_lowercase(), "cutoff": args.cutoff,
        "scale": args.scale, "n": args.n, "method": format!("{method:?}"), "replicas": args.replicas,
    });
    let mut sweep_writer = match &args.sweep_csv {
        Some(path) => {
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
            w.write_record(["lattice", "n_star", "p", "mean_fraction", "std_error", "replicas"]).map_err(io::Error::other)?;
            Some(w)
        }
        None => None,
    };
    with_report("table3", params, Some(plan.base_seed), &args.output, &["lattice", "n_star", "p_crit", "std_error"], stdout, |r| {
        for kind in args.lattice.kinds() {
            for &n_star in &args.cutoff {
                let started = Instant::now();
                let mut config = PCritConfig::new(kind, args.scale, MemoryPolicy::Finite(n_star), plan);
                config.n = args.n;
                let estimate = thresholds::estimate_p_crit(&config, method)?;
                let semi = oracle::percolation_threshold_semi_analytic(kind, args.n, MemoryPolicy::Finite(n_star))?;
                if let Some(w) = sweep_writer.as_mut() {
                    for pt in &estimate.sweep {
                        w.write_record([
                            kind.name().to_string(),
                            n_star.to_string(),
                            pt.p.to_string(),
                            pt.mean_fraction.to_string(),
                            pt.std_error.to_string(),
                            pt.replicas.to_string(),
                        ])
                        .map_err(io::Error::other)?;
                    }
                    w.flush()?;
                }
                let details = json!({
                    "lattice": kind.name(), "n_star": n_star, "p_crit": estimate.p_crit,
                    "std_error": estimate.std_error, "semi_analytic": semi,
                    "steepest_slope_p": estimate.steepest_slope_p, "fit": estimate.fit,
                    "runtime_seconds": started.elapsed().as_secs_f64(),
                });
                r.row(
                    &[kind.name().to_string(), n_star.to_string(), format!("{:.4}", estimate.p_crit), format!("{:.4}", estimate.std_error)],
                    details,
                )?;
            }
        }
        Ok(())
    })
}

fn run_fig1b(args: &Fig1bArgs, stdout: &mut dyn Write) -> Result<()> {
    let plan = args.replay.plan(args.replicas);
    let params = json!({
        "M": args.m, "cutoff": args.cutoff.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "length_km": args.length_km, "alpha": args.alpha, "replicas": args.replicas,
    });
    let columns = ["M", "n_star", "length_km", "p", "mean_trials", "mean_seconds", "std_error_seconds", "replicas", "method"];
    with_report("fig1b", params, Some(plan.base_seed), &args.output, &columns, stdout, |r| {
        for &m in &args.m {
            let probs_for = |p: f64| vec![p; m as usize];
            for &cutoff in &args.cutoff {
                for &len in &args.length_km {
                    let started = Instant::now();
                    let p = crate::model::effective_probability(len, args.alpha, 1.0, 1)?;
                    let rate = crate::model::RateModel::from_link_length(len)?;
                    let (mean, se, replicas, method) = match cutoff {
                        MemoryPolicy::Finite(0) => (analytic::expected_trials_no_memory(p, m)?.value(), 0.0, 0, "analytic"),
                        MemoryPolicy::Infinite => (
                            analytic::expected_trials_infinite_memory(p, m, InfiniteMemoryMethod::SurvivalSeries)?,
                            0.0,
                            0,
                            "analytic",
                        ),
                        MemoryPolicy::Finite(_) => {
                            let probs = probs_for(p);
                            let e = montecarlo::estimate(
                                |rng| {
                                    let counts = montecarlo::sample_connection_trials_paired(&probs, &[cutoff], rng)?;
                                    Ok(counts[0] as f64)
                                },
                                &plan,
                            )?;
                            (e.mean, e.std_error, e.sample_count, "monte-carlo")
                        }
                    };
                    let fields = [
                        m.to_string(),
                        cutoff.to_string(),
                        len.to_string(),
                        p.to_string(),
                        mean.to_string(),
                        rate.trials_to_seconds(mean).to_string(),
                        rate.trials_to_seconds(se).to_string(),
                        replicas.to_string(),
                        method.to_string(),
                    ];
                    let details = json!({
                        "M": m, "n_star": cutoff.to_string(), "length_km": len, "mean_trials": mean,
                        "std_error_trials": se, "replicas": replicas, "method": method,
                        "runtime_seconds": started.elapsed().as_secs_f64(),
                    });
                    r.row(&fields, details)?;
                }
            }
        }
        Ok(())
    })
}

fn run_fig3(args: &Fig3Args, stdout: &mut dyn Write) -> Result<()> {
    let params = json!({"M": args.m, "l_max_km": args.l_max_km, "alpha": args.alpha});
    with_report("fig3", params, None, &args.output, &["L_km", "M", "p", "rate", "capacity"], stdout, |r| {
        for l in 1..=args.l_max_km {
            let l = f64::from(l);
            let capacity = analytic::repeaterless_capacity((-args.alpha * l).exp())?;
            for &m in &args.m {
                let p = (-args.alpha * l / f64::from(m)).exp();
                let rate = analytic::achievable_rate_infinite_cutoff(p, m)?;
                r.row(&[l.to_string(), m.to_string(), p.to_string(), rate.to_string(), capacity.to_string()], Value::Null)?;
            }
        }
        Ok(())
    })
}

fn run_fig4(args: &Fig4Args, stdout: &mut dyn Write) -> Result<()> {
    let plan = args.replay.plan(args.replicas);
    let params = json!({
        "panel": format!("{:?}", args.panel).to_lowercase(), "p": args.p, "layers": args.layers,
        "cutoff": args.cutoff, "sweep_layers": args.sweep_layers,
        "sweep_cutoffs": args.sweep_cutoffs.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "replicas": args.replicas,
    });
    let columns = ["panel", "layers", "position", "n_star", "mean_trials", "std_error", "replicas"];
    let wants = |panel: Panel| args.panel == panel || args.panel == Panel::All;
    with_report("fig4", params, Some(plan.base_seed), &args.output, &columns, stdout, |r| {
        let mut point = |panel: &str, layers: usize, position: usize, cutoff: MemoryPolicy| -> Result<()> {
            let started = Instant::now();
            let pyramid = Pyramid::new(layers)?;
            let topo = pyramid.topology();
            let links = LinkModel::homogeneous(topo.edge_count(), args.p)?;
            let (a, b) = (pyramid.bottom(position)?, pyramid.apex());
            let e = montecarlo::estimate(
                |rng| montecarlo::sample_pair_connection_trials(&topo, a, b, &links, cutoff, rng).map(|n| n as f64),
                &plan,
            )?;
            let fields = [
                panel.to_string(),
                layers.to_string(),
                position.to_string(),
                cutoff.to_string(),
                e.mean.to_string(),
                e.std_error.to_string(),
                e.sample_count.to_string(),
            ];
            r.row(&fields, json!({"panel": panel, "layers": layers, "position": position, "n_star": cutoff.to_string(),
                "estimate": e, "runtime_seconds": started.elapsed().as_secs_f64()}))
        };
        let fixed = MemoryPolicy::Finite(args.cutoff);
        if wants(Panel::B) {
            for &layers in &args.layers {
                point("b", layers, Pyramid::new(layers)?.center_position(), fixed)?;
            }
        }
        if wants(Panel::C) {
            for &layers in &args.layers {
                for x in 1..=layers {
                    point("c", layers, x, fixed)?;
                }
            }
        }
        if wants(Panel::D) {
            for &layers in &args.sweep_layers {
                for &cutoff in &args.sweep_cutoffs {
                    point("d", layers, Pyramid::new(layers)?.center_position(), cutoff)?;
                }
            }
        }
        Ok(())
    })
}

fn run_fig5(args: &Fig5Args, stdout: &mut dyn Write) -> Result<()> {
    let plan = args.replay.plan(args.replicas);
    let ps = if args.p.is_empty() {
        (1..=19).map(|i| f64::from(i) * 0.05).collect()
    } else {
        args.p.clone()
    };
    let params = json!({"M": args.m, "n": args.n, "cutoff": args.cutoff, "p": ps, "replicas": args.replicas});
    let columns = ["p", "n", "n_star", "mean_fraction", "std_error", "replicas", "exact_fraction"];
    with_report("fig5", params, Some(plan.base_seed), &args.output, &columns, stdout, |r| {
        for &n in &args.n {
            for &n_star in &args.cutoff {
                let cutoff = MemoryPolicy::Finite(n_star);
                for &p in &ps {
                    let links = LinkModel::homogeneous(args.m, p)?;
                    let m = args.m as f64;
                    let e = montecarlo::estimate(|rng| montecarlo::sample_link_count(&links, cutoff, n, rng).map(|l| l as f64 / m), &plan)?;
                    let exact = oracle::link_availability(p, cutoff, n)?;
                    let fields = [
                        p.to_string(),
                        n.to_string(),
                        n_star.to_string(),
                        e.mean.to_string(),
                        e.std_error.to_string(),
                        e.sample_count.to_string(),
                        exact.to_string(),
                    ];
                    r.row(&fields, json!({"p": p, "n": n, "n_star": n_star, "estimate": e, "exact_fraction": exact}))?;
                }
            }
        }
        Ok(())
    })
}

fn run_fig6(args: &Fig6Args, stdout: &mut dyn Write) -> Result<()> {
    if args.grid_points < 2 {
        return Err(Error::invalid("grid_points", "need at least two points"));
    }
    let plan = args.replay.plan(args.replicas);
    let params = json!({
        "lattice": format!("{:?}", args.lattice).to_lowercase(), "cutoff": args.cutoff, "scale": args.scale,
        "n": args.n, "grid_points": args.grid_points, "replicas": args.replicas,
    });
    let columns = ["lattice", "n_star", "p", "mean_fraction", "std_error", "replicas", "cluster_share", "cluster_share_std_error"];
    with_report("fig6", params, Some(plan.base_seed), &args.output, &columns, stdout, |r| {
        for kind in args.lattice.kinds() {
            let topo = thresholds::lattice_topology(kind, args.scale, args.scale)?;
            for &n_star in &args.cutoff {
                for i in 0..args.grid_points {
                    let p = 0.01 + 0.98 * i as f64 / (args.grid_points - 1) as f64;
                    let pt = thresholds::sweep_point(&topo, p, args.n, MemoryPolicy::Finite(n_star), &plan)?;
                    let fields = [
                        kind.name().to_string(),
                        n_star.to_string(),
                        pt.p.to_string(),
                        pt.mean_fraction.to_string(),
                        pt.std_error.to_string(),
                        pt.replicas.to_string(),
                        pt.cluster_share.to_string(),
                        pt.cluster_share_std_error.to_string(),
                    ];
                    r.row(&fields, json!(pt))?;
                }
            }
        }
        Ok(())
    })
}
