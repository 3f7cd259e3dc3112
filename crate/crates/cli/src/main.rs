//! `mpkforge` command-line front end.

mod commands;
mod parse;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use parse::XSpec;

#[derive(Parser)]
#[command(name = "mpkforge", version, about = "Distributed sparse matrix power kernel lab")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a stencil or Anderson matrix in Matrix Market format.
    Gen(GenArgs),
    /// Print N_r, N_nz, N_nzr and CRS size.
    Stats(StatsArgs),
    /// Write a row-to-rank partition vector.
    Partition(PartitionArgs),
    /// Halo, boundary-set and extended-halo overheads.
    Analyze(AnalyzeArgs),
    /// Run one kernel and report its accounting.
    Run(RunArgs),
    /// Time repeated runs.
    Bench(BenchArgs),
    /// Grid of traffic or Gflop/s over powers and cache sizes.
    Sweep(SweepArgs),
    /// CRS SpMV roofline bound.
    Roofline(RooflineArgs),
    /// LRU model of matrix traffic.
    Traffic(TrafficArgs),
    /// Chebyshev time propagation of a wave packet.
    Cheb(ChebArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Stencil5,
    Stencil7,
    Anderson,
    /// 7-point stencil plus random long-range links.
    Irregular,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    #[arg(long, value_parser = parse::dims)]
    dims: [usize; 3],
    #[arg(long = "W", default_value_t = 1.0)]
    w: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    tperp: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of random long-range links (irregular kind).
    #[arg(long, default_value_t = 0.01)]
    extra: f64,
    #[arg(short = 'o')]
    output: PathBuf,
    #[arg(long)]
    disorder_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(short = 'm')]
    matrix: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Blockrows,
    Nnz,
    File,
}

#[derive(Debug, Args, Serialize)]
pub struct PartitionArgs {
    #[arg(short = 'm')]
    matrix: PathBuf,
    #[arg(short = 'n')]
    ranks: usize,
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    #[arg(long)]
    partfile: Option<PathBuf>,
    #[arg(short = 'o')]
    output: PathBuf,
}

/// Matrix and its distribution.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DistArgs {
    #[arg(short = 'm')]
    matrix: PathBuf,
    #[arg(short = 'n')]
    ranks: usize,
    /// Partition vector file; rows are split into contiguous blocks otherwise.
    #[arg(long)]
    partfile: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "blockrows")]
    strategy: StrategyArg,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(short = 'p')]
    p_m: usize,
    #[arg(long, value_parser = parse::size)]
    cache: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoArg {
    Trad,
    Dlb,
    Ca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyArg {
    Oracle,
    Cross,
    None,
}

#[derive(Debug, Clone, Serialize)]
#[serde(into = "String")]
pub struct XArg(XSpec);

impl From<XArg> for String {
    fn from(x: XArg) -> String {
        match x.0 {
            XSpec::Ones => "ones".into(),
            XSpec::Rand(s) => format!("rand:{s}"),
            XSpec::File(p) => format!("file:{}", p.display()),
        }
    }
}

fn x_arg(s: &str) -> Result<XArg, String> {
    parse::x_spec(s).map(XArg)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(short = 'p')]
    p_m: usize,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Cache budget for level grouping.
    #[arg(long, value_parser = parse::size, default_value = "32MiB")]
    cache: u64,
    #[arg(long = "x", value_parser = x_arg, default_value = "ones")]
    x: XArg,
    /// Defaults to oracle for at most 4096 rows, none above.
    #[arg(long, value_enum)]
    verify: Option<VerifyArg>,
    #[arg(short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 5)]
    reps: usize,
}

/// A list parsed from one argument.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct List<T>(pub Vec<T>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Gflops,
    Traffic,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    dist: DistArgs,
    /// Powers: A..B or A,B,C.
    #[arg(short = 'p', value_parser = |s: &str| parse::int_range(s).map(List))]
    p_m: List<usize>,
    #[arg(long, value_enum, default_value = "dlb")]
    algo: AlgoArg,
    /// Cache sizes, e.g. 4MiB,8MiB,...,64MiB.
    #[arg(long, value_parser = |s: &str| parse::size_list(s).map(List), default_value = "32MiB")]
    cache: List<u64>,
    #[arg(long = "x", value_parser = x_arg, default_value = "ones")]
    x: XArg,
    #[arg(long, value_enum)]
    metric: MetricArg,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(short = 'o')]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RooflineArgs {
    /// Saturated load bandwidth, e.g. 241GB/s or 2.41e11.
    #[arg(long, value_parser = parse::bandwidth)]
    bs: f64,
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    nnzr: Option<f64>,
    #[arg(short = 'm')]
    matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficAlgo {
    Trad,
    Dlb,
}

#[derive(Debug, Args, Serialize)]
pub struct TrafficArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(short = 'p')]
    p_m: usize,
    #[arg(long, value_parser = parse::size)]
    cache: u64,
    #[arg(long, value_enum)]
    algo: TrafficAlgo,
    #[arg(short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ChebArgs {
    #[arg(long, value_parser = parse::dims)]
    dims: [usize; 3],
    #[arg(long = "W", default_value_t = 1.0)]
    w: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    tperp: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    order: usize,
    #[arg(long)]
    dt: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, value_enum)]
    backend: TrafficAlgo,
    #[arg(short = 'p')]
    p_m: usize,
    #[arg(long, value_parser = parse::size)]
    cache: u64,
    #[arg(long, default_value_t = 20.0)]
    sigma: f64,
    #[arg(long, value_parser = parse::vec3, default_value = "1.5707963267948966,0,0")]
    k0: [f64; 3],
    #[arg(short = 'n', default_value_t = 1)]
    ranks: usize,
    /// Record observables every this many steps.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Append a density snapshot to PREFIX.density.bin every this many steps.
    #[arg(long)]
    density_stride: Option<usize>,
    #[arg(short = 'o')]
    prefix: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen(a) => commands::gen(&a),
        Cmd::Stats(a) => commands::stats(&a),
        Cmd::Partition(a) => commands::partition(&a),
        Cmd::Analyze(a) => commands::analyze(&a),
        Cmd::Run(a) => commands::run(&a),
        Cmd::Bench(a) => commands::bench(&a),
        Cmd::Sweep(a) => commands::sweep(&a),
        Cmd::Roofline(a) => commands::roofline(&a),
        Cmd::Traffic(a) => commands::traffic(&a),
        Cmd::Cheb(a) => commands::cheb(&a),
    };
    if let Err(e) = result {
        eprintln!("mpkforge: {e}");
        std::process::exit(e.code());
    }
}
