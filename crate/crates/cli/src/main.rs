//! `synpart` command-line entry point.

mod commands;
mod config;
mod failure;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format version 1)");

#[derive(Debug, Parser)]
#[command(name = "synpart", version = VERSION, about = "Synaptic partner detection from long-range voxel edges")]
struct Cli {
    /// Worker thread cap; defaults to the available parallelism.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Log verbosity on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// key=value file whose keys mirror the long flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode ground-truth edge labels from partner annotations.
    GenLabels(GenLabelsArgs),
    /// Grid search for the smallest offset set covering all annotations.
    CoverageSearch(CoverageSearchArgs),
    /// Extract candidate synapses from edge scores.
    Extract(ExtractArgs),
    /// Match predicted partners against ground truth.
    Evaluate(EvaluateArgs),
    /// Build a connectivity matrix, optionally diffed against another.
    Connmatrix(ConnmatrixArgs),
    /// Generate a synthetic segmentation with planted partners.
    SynthGen(SynthGenArgs),
    /// Turn edge labels into simulated classifier scores.
    SimulateScores(SimulateScoresArgs),
    /// Generate, encode, simulate, extract and evaluate in one run.
    Roundtrip(RoundtripArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ToleranceModeArg {
    PerEndpoint,
    Sum,
}

#[derive(Debug, Args)]
struct GenLabelsArgs {
    /// Partner annotations: CREMI container (.h5) or tab-separated text.
    #[arg(long)]
    annotations: PathBuf,
    /// Container holding the neuron segmentation.
    #[arg(long)]
    segmentation: PathBuf,
    /// Offset config; defaults to the 14-offset CREMI set.
    #[arg(long)]
    offsets: Option<PathBuf>,
    /// Overrides the synaptic radius from the offset config.
    #[arg(long)]
    r_syn_nm: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CoverageSearchArgs {
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    segmentation: PathBuf,
    /// Candidate offset lengths in nm.
    #[arg(long, value_delimiter = ',', default_value = "80,120,160")]
    lengths: Vec<f64>,
    /// Candidate synaptic radii in nm.
    #[arg(long, value_delimiter = ',', default_value = "60,100,140")]
    radii: Vec<f64>,
    /// Admissible offset counts.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12,14")]
    counts: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON coverage report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Edge score (or label) container.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    segmentation: PathBuf,
    /// Edge score threshold (kept when score >= t1).
    #[arg(long, default_value_t = 0.5)]
    t1: f64,
    /// Confidence threshold (kept when confidence > t2).
    #[arg(long, default_value_t = 2500.0)]
    t2: f64,
    /// Target voxel connectivity: 6 or 26.
    #[arg(long, default_value = "26")]
    connectivity: synpart::Connectivity,
    /// Output: `.tsv` partner table or `.h5` annotation container.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Predicted partners (.tsv, annotation text, or .h5).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth partners (.h5 or annotation text).
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    segmentation: PathBuf,
    /// Matching tolerance d in nm.
    #[arg(long, default_value_t = synpart::eval::DEFAULT_TOLERANCE_NM)]
    tolerance_nm: f64,
    #[arg(long, value_enum, default_value = "per-endpoint")]
    tolerance_mode: ToleranceModeArg,
    /// Allow matches whose endpoints lie in different segments.
    #[arg(long)]
    no_segment_match: bool,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Args)]
struct ConnmatrixArgs {
    /// Partners (.tsv, annotation text, or .h5).
    #[arg(long)]
    partners: PathBuf,
    #[arg(long)]
    segmentation: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Matrix CSV to subtract from the built one.
    #[arg(long)]
    diff: Option<PathBuf>,
    /// Where the difference goes; defaults to `<out stem>.diff.csv`.
    #[arg(long)]
    diff_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Volume shape in voxels, `x,y,z`.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "128,128,32")]
    shape: Vec<usize>,
    /// Voxel size in nm, `x,y,z`.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "4,4,40")]
    resolution: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    segments: usize,
    #[arg(long, default_value_t = 15)]
    synapses: usize,
    /// Pre-to-post distance range in nm, `min,max`.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "80,140")]
    dist: Vec<f64>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Offsets every planted pair must be covered by; defaults to the CREMI set.
    #[arg(long)]
    offsets: Option<PathBuf>,
    /// Skip the coverage requirement on planted pairs.
    #[arg(long)]
    no_coverage_check: bool,
}

#[derive(Debug, Args)]
struct SynthGenArgs {
    #[command(flatten)]
    synth: SynthArgs,
    /// Container receiving segmentation and annotations.
    #[arg(long)]
    out: PathBuf,
    /// Also write the annotations as text.
    #[arg(long)]
    annotations_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Per-voxel rate of spurious positive blobs.
    #[arg(long, default_value_t = 0.0)]
    blob_rate: f64,
    /// Probability of erasing each positive region.
    #[arg(long, default_value_t = 0.0)]
    drop_prob: f64,
}

#[derive(Debug, Args)]
struct SimulateScoresArgs {
    /// Edge label container.
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RoundtripArgs {
    #[command(flatten)]
    synth: SynthArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Seed of the score noise; defaults to the synthesis seed.
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    t1: f64,
    /// Confidence threshold; defaults to half the smallest planted confidence.
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long, default_value = "26")]
    connectivity: synpart::Connectivity,
    /// Matching tolerance d in nm; defaults to twice the synaptic radius.
    #[arg(long)]
    tolerance_nm: Option<f64>,
    #[arg(long, value_enum, default_value = "per-endpoint")]
    tolerance_mode: ToleranceModeArg,
    #[arg(long)]
    no_segment_match: bool,
    #[arg(long)]
    report: PathBuf,
    /// Directory receiving every intermediate file.
    #[arg(long)]
    work_dir: Option<PathBuf>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

fn parse(args: Vec<OsString>) -> Result<Cli, ExitCode> {
    match Cli::try_parse_from(args) {
        Ok(cli) => Ok(cli),
        Err(e) => {
            let _ = e.print();
            Err(if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::validation("threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::validation(format!("threads: {e}")))?;
    }
    match cli.command {
        Command::GenLabels(a) => commands::gen_labels(a),
        Command::CoverageSearch(a) => commands::coverage_search(a),
        Command::Extract(a) => commands::extract(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Connmatrix(a) => commands::connmatrix(a),
        Command::SynthGen(a) => commands::synth_gen(a),
        Command::SimulateScores(a) => commands::simulate_scores(a),
        Command::Roundtrip(a) => commands::roundtrip(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand_config_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code as u8);
        }
    };
    let cli = match parse(args) {
        Ok(c) => c,
        Err(code) => return code,
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
