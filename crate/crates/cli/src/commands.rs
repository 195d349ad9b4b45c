use std::fs;
use std::path::Path;
use std::time::Instant;

use geoanon::aggregation::bind_populations;
use geoanon::ingest::{
    generate_synthetic, load_records, load_regions, load_schema, write_anonymized, write_records, write_regions_csv,
    AnonymizedOutput, DistributionSpec, ASSIGNMENTS_CSV, REPORT_JSON,
};
use geoanon::metrics::{timing_report, MetricsReport, PhaseTimings};
use geoanon::model::{AnonymizationConfig, CoordinateSource, InitialRegion, QuasiIdentifierSchema, Record};
use geoanon::scenarios::{load_scenarios, run_scenarios, METHOD_VORONOI};
use serde_json::json;

use crate::manifest::{sha256_file, RunManifest, MANIFEST_JSON};
use crate::render;
use crate::{AnonymizeArgs, BenchArgs, CliError, DatasetArgs, EvaluateArgs, GenerateArgs, RenderArgs, RenderFormat};

pub const RECORDS_CSV: &str = "records.csv";
pub const REGIONS_CSV: &str = "regions.csv";
pub const BENCH_CSV: &str = "bench.csv";
pub const BENCH_TIMINGS_CSV: &str = "bench_timings.csv";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))
}

fn coordinate_name(source: CoordinateSource) -> &'static str {
    match source {
        CoordinateSource::Provided => "provided",
        CoordinateSource::PolygonCentroid => "polygon_centroid",
    }
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let source = CoordinateSource::from(args.coordinate_source);
    let schema = load_schema(&args.schema)?;
    let spec = DistributionSpec::from_json_file(&args.dist_spec)?;
    let regions = load_regions(&args.regions, source)?;

    let (regions, records) = generate_synthetic(&regions, &spec, &schema, args.seed)?;
    log::info!("generated {} records over {} regions", records.len(), regions.len());

    create_dir(&args.out)?;
    let records_path = args.out.join(RECORDS_CSV);
    let regions_path = args.out.join(REGIONS_CSV);
    write_records(&records_path, &records, &schema).map_err(CliError::internal)?;
    write_regions_csv(&regions_path, &regions).map_err(CliError::internal)?;

    let config = json!({
        "population_range": spec.population_range,
        "coordinate_source": coordinate_name(source),
    });
    let mut manifest = RunManifest::new("generate", args.seed, config);
    manifest.input("regions", &args.regions)?;
    manifest.input("dist_spec", &args.dist_spec)?;
    manifest.input("schema", &args.schema)?;
    manifest.output(&records_path)?;
    manifest.output(&regions_path)?;
    manifest.write(&args.out)
}

struct Dataset {
    regions: Vec<InitialRegion>,
    records: Vec<Record>,
    schema: QuasiIdentifierSchema,
}

fn load_dataset(args: &DatasetArgs, manifest: &mut RunManifest) -> Result<Dataset, CliError> {
    let schema = load_schema(&args.schema)?;
    let regions = load_regions(&args.regions, args.coordinate_source.into())?;
    let records = load_records(&args.records, &schema)?;
    manifest.input("regions", &args.regions)?;
    manifest.input("records", &args.records)?;
    manifest.input("schema", &args.schema)?;
    Ok(Dataset { regions, records, schema })
}

pub fn anonymize(args: &AnonymizeArgs) -> Result<(), CliError> {
    let source = CoordinateSource::from(args.dataset.coordinate_source);
    let mut config = AnonymizationConfig::new(args.k).with_seed(args.seed);
    config.site_count = args.sites;
    config.coordinate_source = source;
    let manifest_config = json!({
        "k": args.k,
        "sites": args.sites,
        "coordinate_source": coordinate_name(source),
    });
    let mut manifest = RunManifest::new("anonymize", args.seed, manifest_config);
    // Checked before anything is read so a bad flag fails fast.
    if args.sites == Some(0) {
        return Err(CliError::Invalid("--sites must be at least 1".into()));
    }

    let mut timings = PhaseTimings::default();
    let start = Instant::now();
    let data = load_dataset(&args.dataset, &mut manifest)?;
    timings.record("load", start.elapsed());

    let result = geoanon::aggregation::anonymize(&data.regions, &data.records, &data.schema, &config)?;
    timings.merge(&result.timings);
    manifest.config["resolved_sites"] = json!(result.site_count());

    let start = Instant::now();
    let (bound, _) = bind_populations(&data.regions, &data.records)?;
    let mut report = MetricsReport::evaluate(&result, &bound, METHOD_VORONOI, &PhaseTimings::default());
    timings.record("metrics", start.elapsed());
    report.timings_ms = timing_report(&timings);
    log::info!(
        "{} aggregated regions, {} of {} records suppressed",
        report.parameters.aggregated_regions,
        report.suppressed_count,
        report.parameters.records
    );

    let files = write_anonymized(
        &args.out,
        AnonymizedOutput {
            schema: &data.schema,
            regions: &bound,
            records: &data.records,
            result: &result,
            report: &report,
        },
    )
    .map_err(CliError::internal)?;
    for path in files.all() {
        manifest.output(path)?;
    }
    manifest.write(&args.out)
}

fn read_report(dir: &Path) -> Result<MetricsReport, CliError> {
    let path = dir.join(REPORT_JSON);
    let text = fs::read_to_string(&path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// Warns about every output whose digest no longer matches the manifest.
fn verify_outputs(dir: &Path) -> Result<(), CliError> {
    let Some(manifest) = RunManifest::read(dir)? else {
        eprintln!("warning: no {MANIFEST_JSON} in {}; outputs not verified", dir.display());
        return Ok(());
    };
    for (name, expected) in &manifest.outputs {
        match sha256_file(&dir.join(name)) {
            Ok(actual) if &actual == expected => {}
            Ok(_) => eprintln!("warning: checksum mismatch for {name}: file differs from {MANIFEST_JSON}"),
            Err(e) => eprintln!("warning: cannot verify {name}: {e}"),
        }
    }
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let report = read_report(&args.result)?;
    verify_outputs(&args.result)?;
    if args.json {
        print!("{}", report.to_json());
        return Ok(());
    }
    let p = &report.parameters;
    println!("method               {}", p.method);
    println!("k                    {}", p.k);
    println!("aggregated regions   {}", p.aggregated_regions);
    println!("records              {}", p.records);
    println!("suppressed           {}", report.suppressed_count);
    println!("compactness          {:.9}", report.compactness);
    println!("discernibility       {}", report.discernibility);
    println!("non-uniform entropy  {:.9}", report.non_uniform_entropy);
    for (phase, ms) in &report.timings_ms {
        println!("time {phase:<15} {ms:.3} ms");
    }
    Ok(())
}

pub fn render(args: &RenderArgs) -> Result<(), CliError> {
    let regions = render::read_assignments(&args.result.join(ASSIGNMENTS_CSV))?;
    let text = match args.format {
        RenderFormat::Svg => render::svg(&regions),
        RenderFormat::Geojson => render::geojson(&regions),
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(&args.out, text).map_err(|e| CliError::Internal(format!("{}: {e}", args.out.display())))
}

pub fn bench(args: &BenchArgs) -> Result<(), CliError> {
    let scenarios = load_scenarios(&args.scenarios)?;
    let config = json!({
        "scenarios": scenarios.len(),
        "coordinate_source": coordinate_name(args.dataset.coordinate_source.into()),
    });
    let mut manifest = RunManifest::new("bench", args.seed, config);
    manifest.input("scenarios", &args.scenarios)?;
    let data = load_dataset(&args.dataset, &mut manifest)?;

    let table = run_scenarios(&data.regions, &data.records, &data.schema, &scenarios, args.seed);
    let failed = table.rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        log::warn!("{failed} of {} scenario runs failed", table.rows.len());
    }

    create_dir(&args.out)?;
    let table_path = args.out.join(BENCH_CSV);
    let timings_path = args.out.join(BENCH_TIMINGS_CSV);
    fs::write(&table_path, table.to_csv()).map_err(CliError::internal)?;
    fs::write(&timings_path, table.timings_csv()).map_err(CliError::internal)?;
    manifest.output(&table_path)?;
    manifest.output(&timings_path)?;
    manifest.write(&args.out)
}
