//! Domain types shared by every stage of the pipeline, plus the
//! equivalence-class computation.
//!
//! Quasi-identifier values are stored as indices into the schema's category
//! lists. Geography is never part of an equivalence-class key: classes are
//! always scoped to a region (initial or aggregated).

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Squared Euclidean distance. Every nearest-site search in the crate
    /// goes through this function so that fast and brute-force paths agree
    /// bit for bit.
    #[inline]
    pub fn distance_sq(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Unweighted arithmetic mean of a non-empty point set.
    pub fn mean<'a>(points: impl IntoIterator<Item = &'a Point2D>) -> Option<Point2D> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            sx += p.x;
            sy += p.y;
            n += 1;
        }
        (n > 0).then(|| Point2D::new(sx / n as f64, sy / n as f64))
    }
}

/// A fine-granularity geographic unit of the initial regionalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialRegion {
    pub id: String,
    pub point: Point2D,
    pub population: u64,
    /// Optional coarse grouping (province, state) used by the synthetic generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

impl InitialRegion {
    pub fn new(id: impl Into<String>, point: Point2D, population: u64) -> Self {
        Self {
            id: id.into(),
            point,
            population,
            group: None,
        }
    }

    pub fn with_group(mut self, group: impl Into<String>) -> Self {
        self.group = Some(group.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub categories: Vec<String>,
}

impl Attribute {
    pub fn new<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn category_index(&self, label: &str) -> Option<u32> {
        self.categories
            .iter()
            .position(|c| c == label)
            .map(|i| i as u32)
    }
}

/// Ordered list of quasi-identifier attributes. Serialized as
/// `{"attributes": [{"name": ..., "categories": [...]}, ...]}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiIdentifierSchema {
    pub attributes: Vec<Attribute>,
}

impl QuasiIdentifierSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let schema = Self { attributes };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for (i, attr) in self.attributes.iter().enumerate() {
            if let Some(prev) = seen.insert(attr.name.as_str(), i) {
                return Err(Error::Validation(format!(
                    "attribute `{}` declared twice (positions {prev} and {i})",
                    attr.name
                )));
            }
            if attr.categories.is_empty() {
                return Err(Error::Validation(format!(
                    "attribute `{}` has no categories",
                    attr.name
                )));
            }
            let mut cats = HashMap::new();
            for c in &attr.categories {
                if cats.insert(c.as_str(), ()).is_some() {
                    return Err(Error::Validation(format!(
                        "attribute `{}` lists category `{c}` twice",
                        attr.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of quasi-identifiers (d).
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Number of distinct keys the schema admits (product of category counts),
    /// saturating at `u64::MAX`.
    pub fn class_count(&self) -> u64 {
        self.attributes
            .iter()
            .fold(1u64, |acc, a| acc.saturating_mul(a.categories.len() as u64))
    }

    /// Restricts the schema to the named attributes, in the given order.
    /// Returns the sub-schema and the column index of each kept attribute.
    pub fn project(&self, names: &[impl AsRef<str>]) -> Result<(QuasiIdentifierSchema, Vec<usize>)> {
        let mut attributes = Vec::with_capacity(names.len());
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let idx = self
                .attribute_index(name)
                .ok_or_else(|| Error::Validation(format!("unknown quasi-identifier `{name}`")))?;
            attributes.push(self.attributes[idx].clone());
            columns.push(idx);
        }
        Ok((QuasiIdentifierSchema::new(attributes)?, columns))
    }
}

/// One individual of the dataset to anonymize.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub region_id: String,
    /// One category index per schema attribute, in schema order.
    pub values: Vec<u32>,
}

impl Record {
    pub fn new(id: impl Into<String>, region_id: impl Into<String>, values: Vec<u32>) -> Self {
        Self {
            id: id.into(),
            region_id: region_id.into(),
            values,
        }
    }

    pub fn validate(&self, schema: &QuasiIdentifierSchema) -> Result<()> {
        if self.values.len() != schema.len() {
            return Err(Error::Validation(format!(
                "record `{}` has {} quasi-identifier values, schema declares {}",
                self.id,
                self.values.len(),
                schema.len()
            )));
        }
        for (value, attr) in self.values.iter().zip(&schema.attributes) {
            if *value as usize >= attr.categories.len() {
                return Err(Error::Validation(format!(
                    "record `{}`: category index {value} out of range for attribute `{}` ({} categories)",
                    self.id,
                    attr.name,
                    attr.categories.len()
                )));
            }
        }
        Ok(())
    }

    /// Keeps only the given value columns, in order.
    pub fn project(&self, columns: &[usize]) -> Record {
        Record {
            id: self.id.clone(),
            region_id: self.region_id.clone(),
            values: columns.iter().map(|&c| self.values[c]).collect(),
        }
    }
}

/// Quasi-identifier tuple. Ordered lexicographically over category indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EquivalenceClassKey(pub Vec<u32>);

/// Records sharing one key within one region scope. Members are indices into
/// the record slice the class was computed from, ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceClass {
    pub key: EquivalenceClassKey,
    pub members: Vec<usize>,
}

impl EquivalenceClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateSource {
    /// Use the x/y coordinates present in the input file.
    #[default]
    Provided,
    /// Use the area-weighted centroid of each region polygon.
    PolygonCentroid,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnonymizationConfig {
    pub k: u32,
    pub site_count: Option<usize>,
    pub seed: u64,
    pub coordinate_source: CoordinateSource,
}

impl AnonymizationConfig {
    pub fn new(k: u32) -> Self {
        Self {
            k,
            site_count: None,
            seed: 0,
            coordinate_source: CoordinateSource::Provided,
        }
    }

    pub fn with_sites(mut self, sites: usize) -> Self {
        self.site_count = Some(sites);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, region_count: usize) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if let Some(s) = self.site_count {
            if s < 1 {
                return Err(Error::Config("site count must be at least 1".into()));
            }
            if s > region_count {
                return Err(Error::Config(format!(
                    "site count {s} exceeds the number of initial regions ({region_count})"
                )));
            }
        }
        Ok(())
    }
}

/// Groups records into equivalence classes within the scope chosen by
/// `scope_of`. Each scope's classes are sorted by key and each class lists
/// its members in ascending record order.
pub fn compute_equivalence_classes<S, F>(
    records: &[Record],
    schema: &QuasiIdentifierSchema,
    scope_of: F,
) -> Result<BTreeMap<S, Vec<EquivalenceClass>>>
where
    S: Ord + Hash + Clone,
    F: Fn(usize, &Record) -> S,
{
    let mut buckets: HashMap<S, HashMap<&[u32], Vec<usize>>> = HashMap::new();
    for (i, record) in records.iter().enumerate() {
        record.validate(schema)?;
        buckets
            .entry(scope_of(i, record))
            .or_default()
            .entry(record.values.as_slice())
            .or_default()
            .push(i);
    }

    Ok(buckets
        .into_iter()
        .map(|(scope, classes)| {
            let mut classes: Vec<EquivalenceClass> = classes
                .into_iter()
                .map(|(key, members)| EquivalenceClass {
                    key: EquivalenceClassKey(key.to_vec()),
                    members,
                })
                .collect();
            classes.sort_unstable_by(|a, b| a.key.cmp(&b.key));
            (scope, classes)
        })
        .collect())
}
