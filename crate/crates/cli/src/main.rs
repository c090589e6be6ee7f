//! `navdecode` command-line entry point.
//!
//! JSON goes to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 data or model error, 2 usage error.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use navdecode::pipeline::{self, AsymmetryOrder, NamedSeries, PipelineConfig, ScenarioConfig};
use navdecode::series::{self, SeriesKind, ValueSeries};
use navdecode::stats::{Horizon, PerfReport, Sampling};
use navdecode::Error;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "navdecode", version, about = "Decode fund NAVs into latent asset weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit, decode and report according to a pipeline config.
    Decode(DecodeArgs),
    /// Performance statistics of one series.
    Stats(StatsArgs),
    /// Correlate a daily series with benchmarks over trailing horizons.
    Compare(CompareArgs),
    /// Generate a synthetic scenario with known weights.
    Synth(SynthArgs),
    /// Check a pipeline config and the files it references.
    ValidateConfig(ValidateArgs),
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the synthetic scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    asymmetry_order: Option<AsymmetryOrder>,
    #[arg(long)]
    af: Option<f64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Nav,
    Price,
    Return,
}

impl From<Kind> for SeriesKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Nav => SeriesKind::Nav,
            Kind::Price => SeriesKind::Price,
            Kind::Return => SeriesKind::Return,
        }
    }
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "daily")]
    sampling: Sampling,
    /// What the value column holds.
    #[arg(long, value_enum, default_value = "nav")]
    kind: Kind,
}

#[derive(Args)]
struct CompareArgs {
    /// Daily series to compare.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "nav")]
    kind: Kind,
    /// Benchmark as NAME=PATH; repeatable.
    #[arg(long = "benchmark", value_parser = parse_benchmark, required = true)]
    benchmarks: Vec<(String, PathBuf)>,
    #[arg(long, value_enum, default_value = "nav")]
    benchmark_kind: Kind,
    #[arg(long, default_value = "quarterly")]
    benchmark_sampling: Sampling,
    #[arg(long, value_delimiter = ',', default_value = "1Y,3Y,5Y,7Y,10Y,lifetime")]
    horizons: Vec<Horizon>,
}

fn parse_benchmark(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, got {s:?}")),
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    assets: u32,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(2..))]
    days: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    weight_vol: f64,
    #[arg(long, default_value_t = 1e-4)]
    obs_noise: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

struct Failure {
    code: u8,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = if error.is_usage() { 2 } else { 1 };
        Failure { code, error }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        error: Error::Config(message.into()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(Error::from)?;
    Ok(())
}

fn load_config(path: &Path) -> Result<PipelineConfig, Failure> {
    if !path.is_file() {
        return Err(usage(format!("config file {} not found", path.display())));
    }
    Ok(PipelineConfig::load(path)?)
}

fn load_returns(path: &Path, kind: Kind) -> Result<ValueSeries, Error> {
    let s = series::load_series(path, kind.into())?;
    match kind {
        Kind::Return => Ok(s),
        _ => series::returns_from_prices(&s).map_err(|e| e.in_file(path.display().to_string())),
    }
}

#[derive(Serialize)]
struct DecodeSummary<'a> {
    output_dir: &'a Path,
    train: pipeline::Span,
    test: pipeline::Span,
    strategy: &'a str,
    sanity_flags: usize,
}

fn cmd_decode(args: DecodeArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if let Some(order) = args.asymmetry_order {
        cfg.asymmetry.order = order;
    }
    if let Some(af) = args.af {
        cfg.asymmetry.af = af;
    }
    if let Some(dir) = args.output_dir {
        cfg.output_dir = dir;
    }
    cfg.validate()?;
    let out = pipeline::execute(&cfg)?;
    for flag in &out.report.sanity_flags {
        eprintln!("sanity: {}", serde_json::to_string(flag).map_err(Error::from)?);
    }
    if let Some(w) = &out.report.fit.warning {
        eprintln!("warning: {w}");
    }
    print_json(&DecodeSummary {
        output_dir: &cfg.output_dir,
        train: out.report.train,
        test: out.report.test,
        strategy: &out.report.strategy,
        sanity_flags: out.report.sanity_flags.len(),
    })
}

fn cmd_stats(args: StatsArgs) -> Result<(), Failure> {
    let returns = load_returns(&args.input, args.kind)?;
    let report = PerfReport::from_returns(&returns, args.sampling)?;
    print_json(&report)
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    let decoded = load_returns(&args.input, args.kind)?;
    let mut benchmarks = Vec::new();
    for (name, path) in &args.benchmarks {
        benchmarks.push(NamedSeries {
            name: name.clone(),
            returns: load_returns(path, args.benchmark_kind)?,
            sampling: args.benchmark_sampling,
        });
    }
    print_json(&pipeline::compare(&decoded, &benchmarks, &args.horizons))
}

fn write_file(path: &Path, f: impl FnOnce(&mut File) -> navdecode::Result<()>) -> Result<(), Error> {
    let mut file = File::create(path).map_err(|e| Error::from(e).in_file(path.display().to_string()))?;
    f(&mut file).map_err(|e| e.in_file(path.display().to_string()))
}

#[derive(Serialize)]
struct SynthSummary {
    out: PathBuf,
    files: [&'static str; 3],
    assets: u32,
    days: u32,
    seed: u64,
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let cfg = ScenarioConfig {
        seed: args.seed,
        assets: args.assets as usize,
        days: args.days as usize,
        weight_vol: args.weight_vol,
        obs_noise: args.obs_noise,
        ..Default::default()
    };
    cfg.validate()?;
    let s = pipeline::generate_scenario(&cfg)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::from(e).in_file(args.out.display().to_string()))?;
    let files = ["prices.csv", "nav.csv", "true_weights.csv"];
    write_file(&args.out.join(files[0]), |f| series::write_panel(f, &s.prices))?;
    write_file(&args.out.join(files[1]), |f| series::write_series(f, &s.nav))?;
    write_file(&args.out.join(files[2]), |f| series::write_panel(f, &s.true_weights))?;
    print_json(&SynthSummary {
        out: args.out,
        files,
        assets: args.assets,
        days: args.days,
        seed: args.seed,
    })
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    cfg.check_paths()?;
    print_json(&serde_json::json!({ "valid": true, "inputs": cfg.input_paths() }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NAVDECODE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decode(a) => cmd_decode(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Synth(a) => cmd_synth(a),
        Command::ValidateConfig(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
