//! File formats: region and record inputs, distribution specs, the synthetic
//! generator and the anonymized outputs.

mod output;
mod records;
mod regions;
mod synth;

use std::path::Path;

pub use output::{write_anonymized, AnonymizedOutput, OutputFiles, ANONYMIZED_CSV, ASSIGNMENTS_CSV, REPORT_JSON, SUPPRESSED_IDS};
pub use records::{load_records, write_records};
pub use regions::{
    load_regions, multipolygon_centroid, polygon_centroid, read_csv_rows, read_geojson_rows, resolve_regions,
    write_regions_csv, RegionFileRow,
};
pub use synth::{
    estimate_distributions, generate_synthetic, DistributionSpec, GroupDistributions, DEFAULT_GROUP,
    DEFAULT_POPULATION_RANGE, RNG_ALGORITHM,
};

use crate::error::{Error, Result};
use crate::model::QuasiIdentifierSchema;

/// Reads a schema document `{"attributes": [{"name": .., "categories": [..]}]}`.
pub fn load_schema(path: impl AsRef<Path>) -> Result<QuasiIdentifierSchema> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let schema: QuasiIdentifierSchema = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    schema.validate().map_err(|e| Error::parse(path, e.to_string()))?;
    Ok(schema)
}
