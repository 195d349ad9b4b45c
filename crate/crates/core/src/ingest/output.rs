use std::fs;
use std::path::{Path, PathBuf};

use crate::aggregation::AnonymizationResult;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::model::{InitialRegion, QuasiIdentifierSchema, Record};

use super::records::write_records_with;

pub const ANONYMIZED_CSV: &str = "anonymized.csv";
pub const SUPPRESSED_IDS: &str = "suppressed_ids.txt";
pub const REPORT_JSON: &str = "report.json";
pub const ASSIGNMENTS_CSV: &str = "assignments.csv";

/// Everything needed to write one anonymization run.
#[derive(Clone, Copy, Debug)]
pub struct AnonymizedOutput<'a> {
    pub schema: &'a QuasiIdentifierSchema,
    pub regions: &'a [InitialRegion],
    pub records: &'a [Record],
    pub result: &'a AnonymizationResult,
    pub report: &'a MetricsReport,
}

#[derive(Clone, Debug)]
pub struct OutputFiles {
    pub anonymized: PathBuf,
    pub suppressed: PathBuf,
    pub report: PathBuf,
    pub assignments: PathBuf,
}

impl OutputFiles {
    pub fn all(&self) -> [&Path; 4] {
        [&self.anonymized, &self.suppressed, &self.report, &self.assignments]
    }
}

/// Writes `anonymized.csv` (surviving records, region replaced by
/// `aggregated_region_id`), `suppressed_ids.txt` (one id per line),
/// `report.json` and `assignments.csv` (initial region -> aggregated region,
/// with coordinates, for rendering). Output depends only on the arguments.
pub fn write_anonymized(out_dir: impl AsRef<Path>, out: AnonymizedOutput<'_>) -> Result<OutputFiles> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = OutputFiles {
        anonymized: dir.join(ANONYMIZED_CSV),
        suppressed: dir.join(SUPPRESSED_IDS),
        report: dir.join(REPORT_JSON),
        assignments: dir.join(ASSIGNMENTS_CSV),
    };

    write_records_with(
        &files.anonymized,
        "aggregated_region_id",
        out.schema,
        out.result
            .surviving()
            .map(|(i, _, site)| (out.records[i].id.as_str(), site.to_string(), out.records[i].values.as_slice())),
    )?;

    let mut suppressed = String::new();
    for id in &out.result.suppressed_record_ids {
        suppressed.push_str(id);
        suppressed.push('\n');
    }
    fs::write(&files.suppressed, suppressed).map_err(|e| Error::io(&files.suppressed, e))?;

    fs::write(&files.report, out.report.to_json()).map_err(|e| Error::io(&files.report, e))?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::parse(&files.assignments, e.to_string());
    writer
        .write_record(["region_id", "x", "y", "population", "aggregated_region_id"])
        .map_err(csv_err)?;
    for (region, site) in out.regions.iter().zip(&out.result.region_site) {
        writer
            .write_record([
                region.id.clone(),
                region.point.x.to_string(),
                region.point.y.to_string(),
                region.population.to_string(),
                site.to_string(),
            ])
            .map_err(csv_err)?;
    }
    let bytes = writer.into_inner().expect("in-memory writer");
    fs::write(&files.assignments, bytes).map_err(|e| Error::io(&files.assignments, e))?;

    Ok(files)
}
