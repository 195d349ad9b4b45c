//! Quality measures of an aggregation: suppression, compactness,
//! discernibility, non-uniform entropy and running time.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::time::Duration;

use serde::{Deserialize, Serialize, Serializer};

use crate::aggregation::AnonymizationResult;
use crate::model::{InitialRegion, Point2D};

/// Ordered phase name -> wall-clock duration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    phases: Vec<(String, Duration)>,
}

impl PhaseTimings {
    /// Adds `elapsed` to `phase`, creating it if needed.
    pub fn record(&mut self, phase: &str, elapsed: Duration) {
        match self.phases.iter_mut().find(|(name, _)| name == phase) {
            Some((_, d)) => *d += elapsed,
            None => self.phases.push((phase.to_string(), elapsed)),
        }
    }

    pub fn get(&self, phase: &str) -> Option<Duration> {
        self.phases.iter().find(|(name, _)| name == phase).map(|(_, d)| *d)
    }

    pub fn total(&self) -> Duration {
        self.phases.iter().map(|(_, d)| *d).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Duration)> {
        self.phases.iter().map(|(n, d)| (n.as_str(), *d))
    }

    pub fn merge(&mut self, other: &PhaseTimings) {
        for (name, d) in other.iter() {
            self.record(name, d);
        }
    }
}

/// Per-phase milliseconds plus a `total` entry equal to their sum.
pub fn timing_report(timings: &PhaseTimings) -> BTreeMap<String, f64> {
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    let mut out: BTreeMap<String, f64> = timings.iter().map(|(n, d)| (n.to_string(), ms(d))).collect();
    out.insert("total".into(), ms(timings.total()));
    out
}

pub fn suppression_count(result: &AnonymizationResult) -> usize {
    result.suppressed_records.len()
}

/// Sum over aggregated regions of the distances from each member point to
/// the unweighted mean of the member points.
pub fn compactness(result: &AnonymizationResult, regions: &[InitialRegion]) -> f64 {
    result
        .aggregated_regions
        .iter()
        .map(|agg| {
            let points: Vec<&Point2D> = agg.member_regions.iter().map(|&r| &regions[r].point).collect();
            let Some(centre) = Point2D::mean(points.iter().copied()) else {
                return 0.0;
            };
            points.iter().map(|p| p.distance(&centre)).sum::<f64>()
        })
        .sum()
}

/// Sum of squared cardinalities over classes with at least `k` members,
/// taken over the merged (pre-suppression) classes.
pub fn discernibility(result: &AnonymizationResult, k: u32) -> u64 {
    result
        .aggregated_regions
        .iter()
        .flat_map(|a| a.all_classes())
        .map(|c| c.len() as u64)
        .filter(|&n| n >= k as u64)
        .map(|n| n * n)
        .sum()
}

/// `-sum log2 Pr(original_i | generalized_i)` with
/// `Pr(a | b) = #{original = a} / #{generalized = b}`, in bits.
pub fn non_uniform_entropy<A, B>(original: &[A], generalized: &[B]) -> f64
where
    A: Hash + Eq,
    B: Hash + Eq,
{
    assert_eq!(original.len(), generalized.len(), "one generalized value per record");
    let mut orig_counts: HashMap<&A, u64> = HashMap::new();
    let mut gen_counts: HashMap<&B, u64> = HashMap::new();
    for (a, b) in original.iter().zip(generalized) {
        *orig_counts.entry(a).or_default() += 1;
        *gen_counts.entry(b).or_default() += 1;
    }
    let total: f64 = original
        .iter()
        .zip(generalized)
        .map(|(a, b)| (orig_counts[a] as f64 / gen_counts[b] as f64).log2())
        .sum();
    // -0.0 would serialize as "-0.0"
    if total == 0.0 {
        0.0
    } else {
        -total
    }
}

/// Original and generalized region of every surviving record.
pub fn surviving_geography(result: &AnonymizationResult) -> (Vec<usize>, Vec<usize>) {
    result.surviving().map(|(_, region, site)| (region, site)).unzip()
}

fn nine_decimals<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round9(*v))
}

fn nine_decimals_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k, round9(*v))))
}

pub fn round9(v: f64) -> f64 {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub k: u32,
    pub sites: usize,
    pub aggregated_regions: usize,
    pub records: usize,
    pub seed: u64,
    pub rng: String,
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub parameters: ReportParameters,
    pub suppressed_count: usize,
    #[serde(serialize_with = "nine_decimals")]
    pub compactness: f64,
    pub discernibility: u64,
    /// Over surviving records only.
    #[serde(serialize_with = "nine_decimals")]
    pub non_uniform_entropy: f64,
    #[serde(serialize_with = "nine_decimals_map")]
    pub timings_ms: BTreeMap<String, f64>,
}

impl MetricsReport {
    /// Computes every measure for `result`. `timings` should include the
    /// phases recorded by the caller around the pipeline (loading, metrics...)
    /// in addition to the result's own.
    pub fn evaluate(
        result: &AnonymizationResult,
        regions: &[InitialRegion],
        method: &str,
        timings: &PhaseTimings,
    ) -> Self {
        let (orig, gen) = surviving_geography(result);
        MetricsReport {
            parameters: ReportParameters {
                k: result.config.k,
                sites: result.site_count(),
                aggregated_regions: result.aggregated_regions.len(),
                records: result.record_count(),
                seed: result.config.seed,
                rng: crate::ingest::RNG_ALGORITHM.to_string(),
                method: method.to_string(),
            },
            suppressed_count: suppression_count(result),
            compactness: compactness(result, regions),
            discernibility: discernibility(result, result.config.k),
            non_uniform_entropy: non_uniform_entropy(&orig, &gen),
            timings_ms: timing_report(timings),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
