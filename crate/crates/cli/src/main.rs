mod commands;
mod manifest;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoanon::model::CoordinateSource;

/// Geographic k-anonymity by Voronoi aggregation of initial regions.
#[derive(Debug, Parser)]
#[command(name = "geoanon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic population and records for a set of regions.
    Generate(GenerateArgs),
    /// Aggregate regions and suppress classes smaller than k.
    Anonymize(AnonymizeArgs),
    /// Print the measurements of a previous anonymize run.
    Evaluate(EvaluateArgs),
    /// Draw the aggregation of a previous anonymize run.
    Render(RenderArgs),
    /// Run a list of scenarios against the uniform-grid baseline.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum CoordinateArg {
    #[default]
    Provided,
    PolygonCentroid,
}

impl From<CoordinateArg> for CoordinateSource {
    fn from(c: CoordinateArg) -> Self {
        match c {
            CoordinateArg::Provided => CoordinateSource::Provided,
            CoordinateArg::PolygonCentroid => CoordinateSource::PolygonCentroid,
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Regions as CSV (region_id,x,y[,population,group]) or GeoJSON.
    #[arg(long)]
    regions: PathBuf,
    /// Per-group category distributions (JSON).
    #[arg(long)]
    dist_spec: PathBuf,
    /// Quasi-identifier schema (JSON).
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    coordinate_source: CoordinateArg,
}

/// Inputs shared by `anonymize` and `bench`.
#[derive(Debug, Args)]
struct DatasetArgs {
    #[arg(long)]
    regions: PathBuf,
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    coordinate_source: CoordinateArg,
}

#[derive(Debug, Args)]
struct AnonymizeArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long)]
    k: u32,
    /// Number of aggregated regions; chosen from the population when omitted.
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Output directory of an anonymize run.
    #[arg(long)]
    result: PathBuf,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RenderFormat {
    Svg,
    Geojson,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long, value_enum)]
    format: RenderFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// JSON array of {name, quasi_identifiers, k, sites}.
    #[arg(long)]
    scenarios: PathBuf,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    /// Bad input or configuration: exit 2.
    #[error("{0}")]
    Invalid(String),
    /// Anything else: exit 1.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn internal(e: impl std::fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<geoanon::Error> for CliError {
    fn from(e: geoanon::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => commands::generate(&args),
        Command::Anonymize(args) => commands::anonymize(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::Render(args) => commands::render(&args),
        Command::Bench(args) => commands::bench(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
