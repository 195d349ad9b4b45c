//! Batch comparison runs: one dataset, several quasi-identifier selections,
//! each anonymized by balanced-density Voronoi aggregation and by the
//! uniform-grid baseline at the same site count.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aggregation::{anonymize, anonymize_with_sites, AnonymizationResult};
use crate::baseline::uniform_grid_sites;
use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, PhaseTimings};
use crate::model::{AnonymizationConfig, InitialRegion, QuasiIdentifierSchema, Record};

pub const METHOD_VORONOI: &str = "voronoi_balanced_density";
pub const METHOD_BASELINE: &str = "uniform_grid_baseline";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub quasi_identifiers: Vec<String>,
    pub k: u32,
    pub sites: usize,
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRow {
    pub scenario: String,
    pub method: &'static str,
    pub quasi_identifiers: Vec<String>,
    pub k: u32,
    pub sites: usize,
    /// `Err` carries the failure message; the run continues past it.
    pub outcome: std::result::Result<MetricsReport, String>,
}

#[derive(Clone, Debug, Default)]
pub struct ScenarioTable {
    pub rows: Vec<ScenarioRow>,
    /// Wall-clock phases per row, aligned with `rows`.
    pub timings: Vec<PhaseTimings>,
}

impl ScenarioTable {
    /// Metrics table. Contains no timings, so it is byte-identical across
    /// runs on the same inputs.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "scenario",
            "method",
            "quasi_identifiers",
            "k",
            "sites",
            "aggregated_regions",
            "suppressed",
            "compactness",
            "discernibility",
            "non_uniform_entropy",
            "status",
        ])
        .expect("in-memory");
        for row in &self.rows {
            let mut fields = vec![
                row.scenario.clone(),
                row.method.to_string(),
                row.quasi_identifiers.join(";"),
                row.k.to_string(),
                row.sites.to_string(),
            ];
            match &row.outcome {
                Ok(m) => fields.extend([
                    m.parameters.aggregated_regions.to_string(),
                    m.suppressed_count.to_string(),
                    format!("{:.9}", m.compactness),
                    m.discernibility.to_string(),
                    format!("{:.9}", m.non_uniform_entropy),
                    "ok".to_string(),
                ]),
                Err(e) => {
                    fields.extend(std::iter::repeat_n(String::new(), 5));
                    fields.push(format!("error: {e}"));
                }
            }
            w.write_record(&fields).expect("in-memory");
        }
        String::from_utf8(w.into_inner().expect("in-memory")).expect("utf-8")
    }

    /// Long-format `scenario,method,phase,ms` table.
    pub fn timings_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scenario", "method", "phase", "ms"]).expect("in-memory");
        for (row, t) in self.rows.iter().zip(&self.timings) {
            for (phase, ms) in crate::metrics::timing_report(t) {
                w.write_record([row.scenario.as_str(), row.method, &phase, &format!("{ms:.3}")])
                    .expect("in-memory");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory")).expect("utf-8")
    }
}

fn run_one(
    regions: &[InitialRegion],
    records: &[Record],
    schema: &QuasiIdentifierSchema,
    scenario: &Scenario,
    seed: u64,
    baseline: bool,
) -> (std::result::Result<MetricsReport, String>, PhaseTimings) {
    let mut timings = PhaseTimings::default();
    let outcome = (|| -> Result<MetricsReport> {
        let start = Instant::now();
        let (sub_schema, columns) = schema.project(&scenario.quasi_identifiers)?;
        let projected: Vec<Record> = records.iter().map(|r| r.project(&columns)).collect();
        timings.record("projection", start.elapsed());

        let config = AnonymizationConfig::new(scenario.k).with_sites(scenario.sites).with_seed(seed);
        let result: AnonymizationResult = if baseline {
            config.validate(regions.len())?;
            anonymize_with_sites(regions, &projected, &sub_schema, &config, uniform_grid_sites(regions, scenario.sites))?
        } else {
            anonymize(regions, &projected, &sub_schema, &config)?
        };
        timings.merge(&result.timings);

        let start = Instant::now();
        let (bound, _) = crate::aggregation::bind_populations(regions, &projected)?;
        let method = if baseline { METHOD_BASELINE } else { METHOD_VORONOI };
        let mut report = MetricsReport::evaluate(&result, &bound, method, &PhaseTimings::default());
        timings.record("metrics", start.elapsed());
        report.timings_ms = crate::metrics::timing_report(&timings);
        Ok(report)
    })()
    .map_err(|e| e.to_string());
    (outcome, timings)
}

/// Runs every scenario sequentially, first with Voronoi aggregation and then
/// with the grid baseline. A failing scenario yields an error row.
pub fn run_scenarios(
    regions: &[InitialRegion],
    records: &[Record],
    schema: &QuasiIdentifierSchema,
    scenarios: &[Scenario],
    seed: u64,
) -> ScenarioTable {
    let mut table = ScenarioTable::default();
    for scenario in scenarios {
        for baseline in [false, true] {
            let (outcome, timings) = run_one(regions, records, schema, scenario, seed, baseline);
            if let Err(e) = &outcome {
                log::warn!("scenario `{}` failed: {e}", scenario.name);
            }
            table.rows.push(ScenarioRow {
                scenario: scenario.name.clone(),
                method: if baseline { METHOD_BASELINE } else { METHOD_VORONOI },
                quasi_identifiers: scenario.quasi_identifiers.clone(),
                k: scenario.k,
                sites: scenario.sites,
                outcome,
            });
            table.timings.push(timings);
        }
    }
    table
}
