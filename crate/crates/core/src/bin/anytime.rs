//! Command-line front end: `bench`, `audit` and `bounds`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use anytime_core::bench::{
    emit_results, run_audit_campaign, run_experiment, AuditKind, AuditParams, CsvSchema, DataSource, ExperimentConfig,
    Format, Method,
};
use anytime_core::bounds::{bound_report, BoundInputs};

#[derive(Parser)]
#[command(
    name = "anytime",
    version,
    about = "Anytime online-to-batch SGD with robust gradient truncation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the logistic-regression benchmark and write per-epoch results.
    Bench(BenchArgs),
    /// Run a Monte Carlo audit campaign and print its report.
    Audit(AuditArgs),
    /// Print the closed-form excess-risk envelopes.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// JSON config; flags given on the command line override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV path or `synthetic:key=value,...`.
    #[arg(long)]
    dataset: Option<String>,
    /// Method(s) to run, comma separated or repeated; all three by default.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Constant step size; defaults to 2/√n_train.
    #[arg(long)]
    step_size: Option<f64>,
    /// Re-estimate the truncation anchor every K epochs.
    #[arg(long)]
    anchor_refresh_epochs: Option<usize>,
    /// Record wall-clock time per epoch (makes output non-reproducible).
    #[arg(long)]
    record_timing: bool,
    #[arg(long)]
    format: Option<Format>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    kind: AuditKind,
    /// Number of replications; a per-kind default when omitted.
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file overriding campaign parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightKind {
    Constant,
}

#[derive(Args)]
struct BoundsArgs {
    /// Diameter of the feasible set.
    #[arg(long = "D")]
    diameter: f64,
    #[arg(long)]
    sigma: f64,
    /// Smoothness constant.
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    delta: f64,
    /// Horizon.
    #[arg(long = "T")]
    horizon: usize,
    /// Constant step size; defaults to 1/lambda.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum, default_value = "constant")]
    weights: WeightKind,
    #[arg(long)]
    json: bool,
}

/// Everything a bench run depends on, written next to the results.
#[derive(Serialize)]
struct ResolvedBench {
    dataset: String,
    schema: CsvSchema,
    format: Format,
    experiment: ExperimentConfig,
}

/// A bench config file: routing keys plus the experiment settings.
#[derive(Default)]
struct BenchFile {
    dataset: Option<String>,
    schema: Option<CsvSchema>,
    out: Option<PathBuf>,
    format: Option<Format>,
    experiment: ExperimentConfig,
}

fn load_bench_file(path: &Path) -> Result<BenchFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Some(map) = value.as_object_mut() else {
        bail!("config {} must hold a JSON object", path.display());
    };
    let mut take = |key: &str| map.remove(key).filter(|v| !v.is_null());
    let dataset = take("dataset").map(serde_json::from_value).transpose()?;
    let schema = take("schema").map(serde_json::from_value).transpose()?;
    let out = take("out").map(serde_json::from_value).transpose()?;
    let format = take("format").map(serde_json::from_value).transpose()?;
    let experiment = serde_json::from_value(value).with_context(|| format!("config {}", path.display()))?;
    Ok(BenchFile {
        dataset,
        schema,
        out,
        format,
        experiment,
    })
}

fn bench(args: BenchArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => load_bench_file(path)?,
        None => BenchFile::default(),
    };
    let mut config = file.experiment;
    if !args.method.is_empty() {
        config.methods = args.method;
    }
    config.trials = args.trials.unwrap_or(config.trials);
    config.epochs = args.epochs.unwrap_or(config.epochs);
    config.batch_size = args.batch.unwrap_or(config.batch_size);
    config.delta = args.delta.unwrap_or(config.delta);
    config.seed = args.seed.unwrap_or(config.seed);
    config.step_size = args.step_size.or(config.step_size);
    config.anchor_refresh_epochs = args.anchor_refresh_epochs.or(config.anchor_refresh_epochs);
    config.record_timing |= args.record_timing;
    config.validate()?;

    let dataset = args
        .dataset
        .or(file.dataset)
        .context("no dataset given; pass --dataset or set it in the config file")?;
    let out = args.out.or(file.out).context("no output directory; pass --out")?;
    let format = args.format.or(file.format).unwrap_or(Format::Csv);
    let schema = file.schema.unwrap_or_default();

    let source = match DataSource::parse(&dataset)? {
        DataSource::Csv { path, .. } => DataSource::Csv {
            path,
            schema: schema.clone(),
        },
        synthetic => synthetic,
    };
    let data = source.load().with_context(|| format!("loading dataset {dataset}"))?;
    let records = run_experiment(&config, &data)?;

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let results = out.join(match format {
        Format::Csv => "results.csv",
        Format::Json => "results.json",
    });
    let summary = emit_results(&records, format, &results)?;
    let resolved = ResolvedBench {
        dataset,
        schema,
        format,
        experiment: config,
    };
    fs::write(out.join("config.json"), serde_json::to_string_pretty(&resolved)? + "\n")?;
    println!("wrote {} records to {}", records.len(), results.display());
    println!("wrote summary to {}", summary.display());
    Ok(())
}

fn audit(args: AuditArgs) -> Result<bool> {
    let params = match &args.params {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => AuditParams::default_for(args.kind),
    };
    let replications = args.replications.unwrap_or_else(|| args.kind.default_replications());
    let report = run_audit_campaign(args.kind, replications, args.seed, &params)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{report}");
    }
    Ok(report.passed)
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let WeightKind::Constant = args.weights;
    let beta = args.beta.unwrap_or(1.0 / args.lambda);
    let inputs = BoundInputs::sgd(args.diameter, args.sigma, args.lambda, args.delta, args.horizon, beta);
    let report = bound_report(&inputs)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    let show = |v: Option<f64>| v.map_or_else(|| "n/a (precondition fails)".to_string(), |x| format!("{x:.6e}"));
    println!(
        "D = {}, sigma = {}, lambda = {}, delta = {}, T = {}, beta = {beta}",
        args.diameter, args.sigma, args.lambda, args.delta, args.horizon
    );
    println!("{:<12} {}", "q_delta", show(Some(report.q_delta)));
    println!("{:<12} {}", "r_delta", show(Some(report.r_delta)));
    println!("{:<12} {}", "sgd_excess", show(report.sgd_excess));
    println!("{:<12} {}", "smd_excess", show(report.smd_excess));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bench(args) => bench(args).map(|()| true),
        Command::Audit(args) => audit(args),
        Command::Bounds(args) => bounds(args).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
