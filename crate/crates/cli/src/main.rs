//! Command-line front end for the excursion confidence-set toolkit.
//!
//! Subcommands:
//! - `construct`: fit a built-in model, bootstrap it, and build the inner
//!   and outer confidence sets for a level of interest.
//! - `construct-external`: the model-agnostic path; consumes a point
//!   prediction vector and a bootstrap prediction matrix produced by any
//!   external model.
//! - `baselines`: reference sets from inverted pointwise or simultaneous
//!   confidence intervals.
//! - `simulate`: run coverage scenarios from a JSON config and emit
//!   plottable reports.
//!
//! Every run writes a manifest (`<output>.manifest.json`) capturing the
//! resolved configuration, the master seed, the toolkit version, and the
//! wall-clock duration; re-running with the recorded seed reproduces output
//! files byte for byte.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 result carries the
//! unattainable-target flag (the result file is still written), 4 a
//! simulation scenario aborted.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use excursion_core::baselines::{invert_bands, pointwise_bands, simultaneous_bands};
use excursion_core::bootstrap::{bootstrap_expected, bootstrap_realized, BootstrapConfig};
use excursion_core::data::{
    load_prediction_matrix, load_table, write_point_vector, write_prediction_matrix,
    PredictionEnsemble, Table, TestFeatures, TrainingData, DEFAULT_SCALE_FLOOR,
};
use excursion_core::excursion::construct;
use excursion_core::learners::PredictorSpec;
use excursion_core::simlab::{reports_to_csv, run_scenario, CoverageReport, SimulationConfig};
use excursion_core::Error as CoreError;

const EXIT_OK: i32 = 0;
const EXIT_INPUT: i32 = 2;
const EXIT_FLAGGED: i32 = 3;
const EXIT_SIM_ABORT: i32 = 4;

/// Environment variable holding the default worker count.
const WORKERS_ENV: &str = "EXCURSION_WORKERS";

#[derive(Parser)]
#[command(
    name = "excursion",
    version,
    about = "Inner/outer confidence sets for outcome excursions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bootstrap a built-in model and construct confidence sets.
    Construct(ConstructArgs),
    /// Construct confidence sets from an external prediction matrix.
    ConstructExternal(ExternalArgs),
    /// Reference sets from inverted confidence intervals.
    Baselines(BaselinesArgs),
    /// Run coverage simulation scenarios from a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Linear,
    Logistic,
    Mlp,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ObjectiveKind {
    Expected,
    Realized,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BaselineMethod {
    Ci,
    Sci,
}

#[derive(Args, Serialize)]
struct TrainingInputArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    train: PathBuf,
    /// Name of the outcome column in the training CSV.
    #[arg(long = "outcome-col")]
    outcome_col: String,
    /// Test-feature CSV.
    #[arg(long)]
    test: PathBuf,
    /// Treat input CSVs as headerless (incompatible with --outcome-col
    /// lookup by name; kept for test files without headers).
    #[arg(long, default_value_t = false)]
    no_header: bool,
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Level of interest c.
    #[arg(long)]
    level: f64,
    /// Target lower bound on the containment probability.
    #[arg(long)]
    tlb: f64,
    #[arg(long, value_enum, default_value = "expected")]
    objective: ObjectiveKind,
    /// Number of bootstrap replicates B.
    #[arg(long, default_value_t = 300)]
    bootstraps: usize,
    /// Master seed; drawn from entropy (and recorded) when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Scale floor applied to the bootstrap standard deviations.
    #[arg(long, default_value_t = DEFAULT_SCALE_FLOOR)]
    scale_floor: f64,
}

#[derive(Args, Serialize)]
struct ConstructArgs {
    #[command(flatten)]
    input: TrainingInputArgs,
    /// Output JSON path for the confidence-set result.
    #[arg(long)]
    out: PathBuf,
    /// Dump the point predictions (one value per line).
    #[arg(long)]
    dump_point: Option<PathBuf>,
    /// Dump the bootstrap prediction matrix (one replicate per row).
    #[arg(long)]
    dump_samples: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Serialize)]
struct ExternalArgs {
    /// Point-prediction CSV (one value per line, no header).
    #[arg(long)]
    point: PathBuf,
    /// Prediction-matrix CSV (one bootstrap replicate per row, no header).
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    level: f64,
    #[arg(long)]
    tlb: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct BaselinesArgs {
    #[command(flatten)]
    input: TrainingInputArgs,
    #[arg(long, value_enum)]
    method: BaselineMethod,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Simulation config JSON (see the README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the per-scenario and combined reports.
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

/// Baseline set report; shares the index-set fields with the construction
/// result JSON.
#[derive(Serialize)]
struct BaselineReport {
    method: &'static str,
    alpha: f64,
    level: f64,
    inner: Vec<usize>,
    outer: Vec<usize>,
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    version: &'static str,
    master_seed: Option<u64>,
    config: serde_json::Value,
    duration_seconds: f64,
}

struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_INPUT,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let code = match &err {
            CoreError::ScenarioAborted { .. } => EXIT_SIM_ABORT,
            _ => EXIT_INPUT,
        };
        let mut message = err.to_string();
        let mut source = std::error::Error::source(&err);
        while let Some(cause) = source {
            message.push_str(&format!(": {cause}"));
            source = cause.source();
        }
        Self { message, code }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {}", err.message);
            std::process::exit(err.code);
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Construct(args) => with_workers(args.workers, || cmd_construct(&args)),
        Command::ConstructExternal(args) => cmd_construct_external(&args),
        Command::Baselines(args) => with_workers(args.workers, || cmd_baselines(&args)),
        Command::Simulate(args) => with_workers(args.workers, || cmd_simulate(&args)),
    }
}

/// Run `body` inside a worker pool of the requested size. The flag wins,
/// then the environment variable, then the runtime default. Results do not
/// depend on the worker count; only wall-clock time does.
fn with_workers<T>(flag: Option<usize>, body: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    let requested = flag.or_else(|| {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
    });
    #[cfg(feature = "parallel")]
    {
        match requested {
            Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("worker pool")
                .install(body),
            _ => body(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = requested;
        body()
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rng().random())
}

fn load_training(args: &TrainingInputArgs) -> Result<(TrainingData, TestFeatures), CliError> {
    if args.no_header {
        return Err(CliError::input(
            "--no-header cannot be combined with --outcome-col lookup by name; \
             add a header row to the training CSV",
        ));
    }
    let train = match load_table(&args.train, true, Some(&args.outcome_col))
        .map_err(|e| flag_error("--train", e))?
    {
        Table::Training(t) => t,
        Table::Test(_) => unreachable!("outcome column requested"),
    };
    let test = match load_table(&args.test, true, None).map_err(|e| flag_error("--test", e))? {
        Table::Test(t) => t,
        Table::Training(_) => unreachable!("no outcome column requested"),
    };
    Ok((train, test))
}

fn flag_error(flag: &str, err: CoreError) -> CliError {
    let mut cli_err = CliError::from(err);
    cli_err.message = format!("{flag}: {}", cli_err.message);
    cli_err
}

fn validate_common(args: &TrainingInputArgs) -> Result<(), CliError> {
    if !(0.0 < args.tlb && args.tlb < 1.0) {
        return Err(CliError::input(format!(
            "--tlb must be in (0, 1), found {}",
            args.tlb
        )));
    }
    if args.bootstraps < 2 {
        return Err(CliError::input(format!(
            "--bootstraps must be at least 2, found {}",
            args.bootstraps
        )));
    }
    if args.scale_floor <= 0.0 || !args.scale_floor.is_finite() {
        return Err(CliError::input("--scale-floor must be positive"));
    }
    Ok(())
}

fn model_spec(kind: ModelKind) -> PredictorSpec {
    match kind {
        ModelKind::Linear => PredictorSpec::Linear,
        ModelKind::Logistic => PredictorSpec::Logistic,
        ModelKind::Mlp => PredictorSpec::Mlp(Default::default()),
    }
}

fn build_ensemble(args: &TrainingInputArgs, seed: u64) -> Result<PredictionEnsemble, CliError> {
    let (train, test) = load_training(args)?;
    let spec = model_spec(args.model);
    let cfg = BootstrapConfig {
        b: args.bootstraps,
        rng_seed: seed,
        scale_floor: args.scale_floor,
    };
    let ens = match args.objective {
        ObjectiveKind::Expected => bootstrap_expected(&spec, &train, &test, &cfg)?,
        ObjectiveKind::Realized => bootstrap_realized(&spec, &train, &test, &cfg)?,
    };
    Ok(ens)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("cannot serialize output: {e}")))?;
    body.push('\n');
    std::fs::write(path, body)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn write_manifest<C: Serialize>(
    command: &'static str,
    out: &Path,
    seed: Option<u64>,
    config: &C,
    started: Instant,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        master_seed: seed,
        config: serde_json::to_value(config)
            .map_err(|e| CliError::input(format!("cannot serialize manifest: {e}")))?,
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    let mut path = out.as_os_str().to_owned();
    path.push(".manifest.json");
    write_json(&manifest, Path::new(&path))
}

fn cmd_construct(args: &ConstructArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    validate_common(&args.input)?;
    let seed = resolve_seed(args.input.seed);
    let ens = build_ensemble(&args.input, seed)?;

    if let Some(path) = &args.dump_point {
        write_point_vector(ens.point(), path).map_err(CliError::from)?;
    }
    if let Some(path) = &args.dump_samples {
        write_prediction_matrix(ens.samples(), path).map_err(CliError::from)?;
    }

    let result = construct(&ens, args.input.level, args.input.tlb)?;
    write_json(&result, &args.out)?;
    write_manifest("construct", &args.out, Some(seed), args, started)?;
    Ok(if result.is_flagged() {
        EXIT_FLAGGED
    } else {
        EXIT_OK
    })
}

fn cmd_construct_external(args: &ExternalArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    if !(0.0 < args.tlb && args.tlb < 1.0) {
        return Err(CliError::input(format!(
            "--tlb must be in (0, 1), found {}",
            args.tlb
        )));
    }
    let ens = load_prediction_matrix(&args.point, &args.samples)
        .map_err(|e| flag_error("--point/--samples", e))?;
    let result = construct(&ens, args.level, args.tlb)?;
    write_json(&result, &args.out)?;
    write_manifest("construct-external", &args.out, None, args, started)?;
    Ok(if result.is_flagged() {
        EXIT_FLAGGED
    } else {
        EXIT_OK
    })
}

fn cmd_baselines(args: &BaselinesArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    validate_common(&args.input)?;
    let seed = resolve_seed(args.input.seed);
    let ens = build_ensemble(&args.input, seed)?;
    let alpha = 1.0 - args.input.tlb;

    let (method, bands) = match args.method {
        BaselineMethod::Ci => ("ci", pointwise_bands(&ens, alpha)?),
        BaselineMethod::Sci => ("sci", simultaneous_bands(&ens, alpha)?),
    };
    let (inner, outer) = invert_bands(&bands, args.input.level);
    let report = BaselineReport {
        method,
        alpha,
        level: args.input.level,
        inner,
        outer,
    };
    write_json(&report, &args.out)?;
    write_manifest("baselines", &args.out, Some(seed), args, started)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    let raw = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::input(format!(
            "--config: cannot read {}: {e}",
            args.config.display()
        ))
    })?;
    let config: SimulationConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::input(format!("--config: invalid JSON: {e}")))?;
    if config.scenarios.is_empty() {
        return Err(CliError::input("--config: no scenarios defined"));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::input(format!("--out-dir: {e}")))?;

    let mut reports: Vec<CoverageReport> = Vec::with_capacity(config.scenarios.len());
    for scenario in &config.scenarios {
        let report = run_scenario(scenario)?;
        write_json(
            &report,
            &args.out_dir.join(format!("{}.json", scenario.name)),
        )?;
        reports.push(report);
    }

    write_json(&reports, &args.out_dir.join("report.json"))?;
    std::fs::write(args.out_dir.join("report.csv"), reports_to_csv(&reports))
        .map_err(|e| CliError::input(format!("cannot write report.csv: {e}")))?;
    write_manifest(
        "simulate",
        &args.out_dir.join("report.json"),
        None,
        &config,
        started,
    )?;
    Ok(EXIT_OK)
}
