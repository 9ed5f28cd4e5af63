//! Batch command-line front-end: generate synthetic data, filter a CSV,
//! run a grid-search evaluation, or validate a consumption-data file.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error, 3 validation
//! findings (the validator ran fine but the data is dirty). Every
//! subcommand echoes its fully resolved configuration into the JSON
//! summary, and output files are written via temp-file-plus-rename so an
//! error never leaves partial output behind.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use swad_core::data::generate::{gen_three_gaussians, gen_toy, GaussianGroup, ThreeGaussiansConfig, ToyKind};
use swad_core::data::lcpr::{validate_lcpr, LcprSchema, ValidationReport};
use swad_core::data::{read_csv, standardize, write_csv, CsvIngest, Dataset};
use swad_core::eval::{grid_search, results_to_csv, GridSpec};
use swad_core::filter::{chunked_swad, fead, swad, FilterConfig, FilterReport, ThresholdMode};
use swad_core::sw::WassersteinOrder;
use swad_core::Error as CoreError;

#[derive(Parser)]
#[command(name = "swad", version, about = "Sliced-Wasserstein outlier filtering toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flag outliers in a numeric CSV
    Filter(FilterArgs),
    /// Grid-search a detector against ground-truth labels
    Eval(EvalArgs),
    /// Write a synthetic dataset CSV
    Generate(GenerateArgs),
    /// Validate a consumption-data CSV against the bundled schema
    ValidateLcpr(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Swad,
    Fead,
    SwadChunked,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Swad => "swad",
            Algo::Fead => "fead",
            Algo::SwadChunked => "swad-chunked",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Raw,
    Normalized,
}

#[derive(Args)]
struct FilterArgs {
    /// Input CSV (numeric; header row expected unless --no-header)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    /// Sliced-Wasserstein vote threshold
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    epsilon: f64,
    /// Euclidean vote threshold (fead only)
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    eta: f64,
    /// Fraction of positive votes required to flag, in [0, 1]
    #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
    p: f64,
    /// Votes per candidate (default: min(30, N-1))
    #[arg(long)]
    n: Option<usize>,
    /// Number of random projections
    #[arg(long, default_value_t = 50)]
    projections: usize,
    /// Wasserstein order t >= 1
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    order: f64,
    /// Chunk size (swad-chunked only)
    #[arg(long)]
    chunk_size: Option<usize>,
    /// How epsilon is interpreted (default: raw; swad-chunked: normalized)
    #[arg(long, value_enum)]
    threshold_mode: Option<ModeArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standardize features to zero mean / unit variance first
    #[arg(long)]
    standardize: bool,
    /// Name of a {0,1} label column to exclude from the features
    #[arg(long)]
    label_column: Option<String>,
    /// Input has no header row
    #[arg(long)]
    no_header: bool,
    /// Per-row results CSV (row_index, score, is_outlier)
    #[arg(long)]
    output: PathBuf,
    /// JSON run summary
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Labeled input CSV
    #[arg(long)]
    input: PathBuf,
    /// Ground-truth label column ({0,1}; 1 = outlier)
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Grid specification JSON ({"model": ..., "axes": {...}})
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    standardize: bool,
    /// Full results table CSV
    #[arg(long)]
    output: PathBuf,
    /// Best-run summary JSON
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    ThreeGaussians,
    Blobs,
    Moons,
    Circles,
    Anisotropic,
    UniformNoise,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Sample count (toy kinds)
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Additive Gaussian noise scale (toy kinds)
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    noise: f64,
    /// Majority population (three-gaussians)
    #[arg(long, default_value_t = 300)]
    n_major: usize,
    /// Minority population (three-gaussians)
    #[arg(long, default_value_t = 60)]
    n_minor: usize,
    /// Outlier population (three-gaussians)
    #[arg(long, default_value_t = 15)]
    n_outlier: usize,
    /// Blob centers (blobs)
    #[arg(long, default_value_t = 3)]
    centers: usize,
    /// Inner/outer radius ratio (circles)
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    factor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (includes a truth-label column)
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Input CSV with the consumption-table headers
    #[arg(long)]
    input: PathBuf,
    /// Alternative schema JSON (default: bundled v1 schema)
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Plausibility cap, `column=value`; repeatable
    #[arg(long = "cap", value_name = "COLUMN=VALUE")]
    caps: Vec<String>,
    /// Report JSON path (default: stdout)
    #[arg(long)]
    report: Option<PathBuf>,
}

enum CliError {
    /// Exit 2: the invocation itself is wrong.
    Usage(String),
    /// Exit 1: the invocation is fine but the data is not.
    Data(String),
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::InvalidParameter { .. } => CliError::Usage(err.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Filter(args) => cmd_filter(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Generate(args) => cmd_generate(&args),
        Command::ValidateLcpr(args) => cmd_validate_lcpr(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Writes `contents` through a sibling temp file and an atomic rename.
fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = PathBuf::from(format!("{}.tmp", path.display()));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::Data(format!("cannot write {}: {e}", path.display()))
    })
}

fn run_in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<(T, usize)> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Data(format!("cannot build thread pool: {e}")))?;
    let used = pool.current_num_threads();
    Ok((pool.install(f), used))
}

fn ingest(
    path: &Path,
    has_header: bool,
    label_column: Option<&str>,
    apply_standardize: bool,
) -> CliResult<(Dataset, usize)> {
    let CsvIngest {
        dataset,
        dropped_rows,
    } = read_csv(path, has_header, label_column)?;
    let dataset = if apply_standardize {
        standardize(&dataset)?.dataset
    } else {
        dataset
    };
    Ok((dataset, dropped_rows))
}

#[derive(Serialize)]
struct ResolvedFilterConfig {
    algo: &'static str,
    order: f64,
    projections: usize,
    epsilon: f64,
    eta: f64,
    p: f64,
    n: usize,
    seed: u64,
    chunk_size: Option<usize>,
    threshold_mode: ThresholdMode,
}

#[derive(Serialize)]
struct FilterSummary {
    command: &'static str,
    input: String,
    rows_used: usize,
    rows_dropped: usize,
    standardize: bool,
    threads: usize,
    config: ResolvedFilterConfig,
    outliers: usize,
    wall_time_ms: f64,
}

fn cmd_filter(args: &FilterArgs) -> CliResult<u8> {
    let start = Instant::now();
    let mode = match (args.algo, args.threshold_mode) {
        (Algo::SwadChunked, Some(ModeArg::Raw)) => {
            return Err(CliError::Usage(
                "--threshold-mode raw is incompatible with --algo swad-chunked".into(),
            ))
        }
        (Algo::SwadChunked, _) => ThresholdMode::Normalized,
        (_, Some(ModeArg::Normalized)) => ThresholdMode::Normalized,
        _ => ThresholdMode::Raw,
    };
    if args.chunk_size.is_some() && args.algo != Algo::SwadChunked {
        return Err(CliError::Usage(
            "--chunk-size is only valid with --algo swad-chunked".into(),
        ));
    }
    if args.algo == Algo::SwadChunked && args.chunk_size.is_none() {
        return Err(CliError::Usage(
            "--algo swad-chunked requires --chunk-size".into(),
        ));
    }
    let cfg = FilterConfig {
        order: WassersteinOrder::new(args.order)?,
        num_projections: args.projections,
        epsilon: args.epsilon,
        eta: args.eta,
        vote_threshold: args.p,
        votes: args.n,
        seed: args.seed,
        chunk_size: args.chunk_size,
        threshold_mode: mode,
    };
    cfg.validate()?;

    let (data, dropped) = ingest(
        &args.input,
        !args.no_header,
        args.label_column.as_deref(),
        args.standardize,
    )?;
    let algo = args.algo;
    let (report, threads): (Result<FilterReport, CoreError>, usize) =
        run_in_pool(args.threads, || match algo {
            Algo::Swad => swad(&data, &cfg),
            Algo::Fead => fead(&data, &cfg),
            Algo::SwadChunked => chunked_swad(&data, &cfg),
        })?;
    let report = report?;

    let mut rows = String::from("row_index,score,is_outlier\n");
    for (i, (&score, &flag)) in report.scores.iter().zip(&report.flags).enumerate() {
        rows.push_str(&format!("{i},{score},{}\n", u8::from(flag)));
    }

    let summary = FilterSummary {
        command: "filter",
        input: args.input.display().to_string(),
        rows_used: data.n_samples(),
        rows_dropped: dropped,
        standardize: args.standardize,
        threads,
        config: ResolvedFilterConfig {
            algo: args.algo.name(),
            order: cfg.order.get(),
            projections: cfg.num_projections,
            epsilon: cfg.epsilon,
            eta: cfg.eta,
            p: cfg.vote_threshold,
            n: report.votes_cast,
            seed: cfg.seed,
            chunk_size: cfg.chunk_size,
            threshold_mode: cfg.threshold_mode,
        },
        outliers: report.outlier_count(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };

    write_atomic(&args.output, &rows)?;
    let summary_json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Data(e.to_string()))?;
    match &args.summary {
        Some(path) => write_atomic(path, &summary_json)?,
        None => println!("{summary_json}"),
    }
    Ok(0)
}

#[derive(Serialize)]
struct EvalSummary {
    command: &'static str,
    input: String,
    label_column: String,
    rows_used: usize,
    rows_dropped: usize,
    standardize: bool,
    threads: usize,
    seed: u64,
    model: String,
    axes: BTreeMap<String, Vec<f64>>,
    grid_points: usize,
    best: swad_core::eval::EvalResult,
    wall_time_ms: f64,
}

fn cmd_eval(args: &EvalArgs) -> CliResult<u8> {
    let start = Instant::now();
    let grid_file = std::fs::File::open(&args.grid)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", args.grid.display())))?;
    let grid: GridSpec = serde_json::from_reader(grid_file)
        .map_err(|e| CliError::Usage(format!("malformed grid file {}: {e}", args.grid.display())))?;
    grid.validate()?;

    let (data, dropped) = ingest(
        &args.input,
        true,
        Some(args.label_column.as_str()),
        args.standardize,
    )?;
    let seed = args.seed;
    let (output, threads) = run_in_pool(args.threads, || grid_search(&data, &grid, seed))?;
    let output = output?;

    let table = results_to_csv(&output);
    let summary = EvalSummary {
        command: "eval",
        input: args.input.display().to_string(),
        label_column: args.label_column.clone(),
        rows_used: data.n_samples(),
        rows_dropped: dropped,
        standardize: args.standardize,
        threads,
        seed,
        model: output.model.name().to_string(),
        axes: grid.axes.clone(),
        grid_points: output.results.len(),
        best: output.best.clone(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };

    write_atomic(&args.output, &table)?;
    let summary_json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Data(e.to_string()))?;
    match &args.summary {
        Some(path) => write_atomic(path, &summary_json)?,
        None => println!("{summary_json}"),
    }
    Ok(0)
}

#[derive(Serialize)]
struct GenerateSummary {
    command: &'static str,
    kind: String,
    rows: usize,
    seed: u64,
    output: String,
}

fn cmd_generate(args: &GenerateArgs) -> CliResult<u8> {
    let dataset = match args.kind {
        Kind::ThreeGaussians => {
            let cfg = ThreeGaussiansConfig {
                majority: GaussianGroup {
                    n: args.n_major,
                    ..ThreeGaussiansConfig::default().majority
                },
                minority: GaussianGroup {
                    n: args.n_minor,
                    ..ThreeGaussiansConfig::default().minority
                },
                outliers: GaussianGroup {
                    n: args.n_outlier,
                    ..ThreeGaussiansConfig::default().outliers
                },
                seed: args.seed,
            };
            gen_three_gaussians(&cfg)?
        }
        Kind::Blobs => gen_toy(ToyKind::Blobs { centers: args.centers }, args.n, args.noise, args.seed)?,
        Kind::Moons => gen_toy(ToyKind::Moons, args.n, args.noise, args.seed)?,
        Kind::Circles => gen_toy(ToyKind::Circles { factor: args.factor }, args.n, args.noise, args.seed)?,
        Kind::Anisotropic => gen_toy(ToyKind::Anisotropic, args.n, args.noise, args.seed)?,
        Kind::UniformNoise => gen_toy(ToyKind::UniformNoise, args.n, args.noise, args.seed)?,
    };

    let mut buf = Vec::new();
    write_csv(&dataset, &mut buf).map_err(|e| CliError::Data(e.to_string()))?;
    let contents = String::from_utf8(buf).expect("csv output is utf-8");
    write_atomic(&args.output, &contents)?;

    let summary = GenerateSummary {
        command: "generate",
        kind: dataset.provenance().to_string(),
        rows: dataset.n_samples(),
        seed: args.seed,
        output: args.output.display().to_string(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(e.to_string()))?
    );
    Ok(0)
}

fn parse_caps(raw: &[String]) -> CliResult<Option<BTreeMap<String, f64>>> {
    if raw.is_empty() {
        return Ok(None);
    }
    let mut caps = BTreeMap::new();
    for item in raw {
        let (name, value) = item.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--cap expects COLUMN=VALUE, got `{item}`"))
        })?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::Usage(format!("--cap {name}: `{value}` is not a number")))?;
        caps.insert(name.to_string(), value);
    }
    Ok(Some(caps))
}

fn cmd_validate_lcpr(args: &ValidateArgs) -> CliResult<u8> {
    let schema = match &args.schema {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
            LcprSchema::from_json(file)
                .map_err(|e| CliError::Usage(format!("malformed schema {}: {e}", path.display())))?
        }
        None => LcprSchema::bundled(),
    };
    let caps = parse_caps(&args.caps)?;
    let report: ValidationReport = validate_lcpr(&args.input, &schema, caps.as_ref())?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))?;
    match &args.report {
        Some(path) => write_atomic(path, &json)?,
        None => println!("{json}"),
    }
    Ok(if report.is_clean() { 0 } else { 3 })
}
