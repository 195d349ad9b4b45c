//! Synthetic census-style microdata.
//!
//! Each region draws a population uniformly from the configured range and is
//! filled with that many records whose attributes are drawn independently
//! from the categorical distributions of the region's group.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InitialRegion, QuasiIdentifierSchema, Record};

/// Identifier of the random source, recorded in reports and manifests.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64";

/// Group label used for regions that carry none.
pub const DEFAULT_GROUP: &str = "default";

pub const DEFAULT_POPULATION_RANGE: (u64, u64) = (400, 700);

const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// `group -> attribute -> category -> probability`.
pub type GroupDistributions = BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(default = "default_range")]
    pub population_range: (u64, u64),
    pub groups: GroupDistributions,
}

fn default_range() -> (u64, u64) {
    DEFAULT_POPULATION_RANGE
}

impl DistributionSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("distribution spec serializes")
    }

    /// Checks the range and that every group gives, for every schema
    /// attribute, a probability vector over known categories summing to 1.
    /// Returns per-group samplers indexed like the schema.
    fn samplers(&self, schema: &QuasiIdentifierSchema) -> Result<HashMap<&str, Vec<WeightedIndex<f64>>>> {
        let (lo, hi) = self.population_range;
        if lo > hi {
            return Err(Error::Validation(format!("population range [{lo}, {hi}] is empty")));
        }
        let mut out = HashMap::new();
        for (group, attrs) in &self.groups {
            let mut samplers = Vec::with_capacity(schema.len());
            for attr in &schema.attributes {
                let probs = attrs.get(&attr.name).ok_or_else(|| {
                    Error::Validation(format!("group `{group}` has no distribution for attribute `{}`", attr.name))
                })?;
                let mut weights = vec![0.0; attr.categories.len()];
                for (cat, &p) in probs {
                    let idx = attr.category_index(cat).ok_or_else(|| {
                        Error::Validation(format!(
                            "group `{group}`, attribute `{}`: unknown category `{cat}`",
                            attr.name
                        ))
                    })?;
                    if !(p.is_finite() && p >= 0.0) {
                        return Err(Error::Validation(format!(
                            "group `{group}`, attribute `{}`: invalid probability {p} for `{cat}`",
                            attr.name
                        )));
                    }
                    weights[idx as usize] = p;
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                    return Err(Error::Validation(format!(
                        "group `{group}`, attribute `{}`: probabilities sum to {sum}",
                        attr.name
                    )));
                }
                samplers.push(WeightedIndex::new(&weights).map_err(|e| Error::Validation(e.to_string()))?);
            }
            out.insert(group.as_str(), samplers);
        }
        Ok(out)
    }
}

/// Generates populations and records for `regions`.
///
/// Regions are processed in id order, records in creation order and
/// attributes in schema order, all from one ChaCha8 stream seeded with
/// `seed`. Record ids are `<region_id>-<n>`, n counting from 0. The
/// returned regions are sorted by id.
pub fn generate_synthetic(
    regions: &[InitialRegion],
    spec: &DistributionSpec,
    schema: &QuasiIdentifierSchema,
    seed: u64,
) -> Result<(Vec<InitialRegion>, Vec<Record>)> {
    schema.validate()?;
    let samplers = spec.samplers(schema)?;

    let mut ordered: Vec<InitialRegion> = regions.to_vec();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    for r in &ordered {
        let group = r.group.as_deref().unwrap_or(DEFAULT_GROUP);
        if !samplers.contains_key(group) {
            return Err(Error::Validation(format!(
                "region `{}` belongs to group `{group}`, which has no distribution",
                r.id
            )));
        }
    }

    let (lo, hi) = spec.population_range;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for region in &mut ordered {
        let dists = &samplers[region.group.as_deref().unwrap_or(DEFAULT_GROUP)];
        let population = rng.random_range(lo..=hi);
        region.population = population;
        records.reserve(population as usize);
        for n in 0..population {
            let values = dists.iter().map(|d| d.sample(&mut rng) as u32).collect();
            records.push(Record::new(format!("{}-{n}", region.id), region.id.clone(), values));
        }
    }
    Ok((ordered, records))
}

/// Empirical per-group category frequencies of a sample (unweighted counts,
/// no smoothing). Records whose region is unknown are skipped; regions
/// without a group count towards [`DEFAULT_GROUP`].
pub fn estimate_distributions(
    records: &[Record],
    regions: &[InitialRegion],
    schema: &QuasiIdentifierSchema,
    population_range: (u64, u64),
) -> Result<DistributionSpec> {
    let group_of: HashMap<&str, &str> = regions
        .iter()
        .map(|r| (r.id.as_str(), r.group.as_deref().unwrap_or(DEFAULT_GROUP)))
        .collect();

    let mut counts: BTreeMap<&str, (u64, Vec<Vec<u64>>)> = BTreeMap::new();
    for rec in records {
        rec.validate(schema)?;
        let Some(group) = group_of.get(rec.region_id.as_str()) else {
            continue;
        };
        let (n, per_attr) = counts.entry(group).or_insert_with(|| {
            (0, schema.attributes.iter().map(|a| vec![0; a.categories.len()]).collect())
        });
        *n += 1;
        for (a, &v) in per_attr.iter_mut().zip(&rec.values) {
            a[v as usize] += 1;
        }
    }

    let groups = counts
        .into_iter()
        .map(|(group, (n, per_attr))| {
            let attrs = schema
                .attributes
                .iter()
                .zip(per_attr)
                .map(|(attr, cats)| {
                    let probs = attr
                        .categories
                        .iter()
                        .zip(cats)
                        .map(|(c, count)| (c.clone(), count as f64 / n as f64))
                        .collect();
                    (attr.name.clone(), probs)
                })
                .collect();
            (group.to_string(), attrs)
        })
        .collect();
    Ok(DistributionSpec {
        population_range,
        groups,
    })
}
