//! Voronoi aggregation: every initial region joins the aggregated region of
//! its nearest site, the regions' equivalence classes are merged, and classes
//! smaller than k are suppressed.
//!
//! Nearest-site assignment is point location in the Voronoi diagram of the
//! sites, so the diagram itself is never built.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::PhaseTimings;
use crate::model::{
    compute_equivalence_classes, AnonymizationConfig, EquivalenceClass, EquivalenceClassKey, InitialRegion, Point2D,
    QuasiIdentifierSchema, Record,
};
use crate::placement::{choose_site_count, place_sites, Site};
use crate::spatial::{nearest_brute_force, KdTree};

/// Region-to-site grouping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    /// Site index of each initial region, aligned with the region slice.
    pub site_of_region: Vec<usize>,
    /// Region indices per site, ascending; every site has an entry.
    pub members: Vec<Vec<usize>>,
}

impl Assignment {
    fn from_sites(site_of_region: Vec<usize>, site_count: usize) -> Self {
        let mut members = vec![Vec::new(); site_count];
        for (region, &site) in site_of_region.iter().enumerate() {
            members[site].push(region);
        }
        Self {
            site_of_region,
            members,
        }
    }
}

fn check_sites(sites: &[Site]) -> Result<Vec<Point2D>> {
    if sites.is_empty() {
        return Err(Error::Config("at least one site is required".into()));
    }
    sites
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.index != i {
                Err(Error::Validation(format!("site at position {i} carries index {}", s.index)))
            } else if !s.location.is_finite() {
                Err(Error::Validation(format!("site {i} has a non-finite location")))
            } else {
                Ok(s.location)
            }
        })
        .collect()
}

/// Assigns each region to the site nearest its point (lowest site index on
/// ties) using a k-d tree over the sites.
pub fn assign_regions_to_sites(regions: &[InitialRegion], sites: &[Site]) -> Result<Assignment> {
    let locations = check_sites(sites)?;
    let tree = KdTree::new(&locations);
    let site_of_region = regions
        .iter()
        .map(|r| tree.nearest(&r.point).expect("non-empty tree"))
        .collect();
    Ok(Assignment::from_sites(site_of_region, sites.len()))
}

/// All-pairs scan with the same tie-break. Quadratic; kept as a reference.
pub fn assign_regions_brute_force(regions: &[InitialRegion], sites: &[Site]) -> Result<Assignment> {
    let locations = check_sites(sites)?;
    let site_of_region = regions
        .iter()
        .map(|r| nearest_brute_force(&locations, &r.point).expect("non-empty"))
        .collect();
    Ok(Assignment::from_sites(site_of_region, sites.len()))
}

/// Unions the per-region classes of every aggregated region by key. Output is
/// one key-sorted class list per site, members ascending.
pub fn merge_classes(
    groups: &Assignment,
    per_region_classes: &BTreeMap<usize, Vec<EquivalenceClass>>,
) -> Vec<Vec<EquivalenceClass>> {
    groups
        .members
        .iter()
        .map(|regions| {
            let mut merged: BTreeMap<&EquivalenceClassKey, Vec<usize>> = BTreeMap::new();
            for region in regions {
                for class in per_region_classes.get(region).into_iter().flatten() {
                    merged.entry(&class.key).or_default().extend_from_slice(&class.members);
                }
            }
            merged
                .into_iter()
                .map(|(key, mut members)| {
                    members.sort_unstable();
                    EquivalenceClass {
                        key: key.clone(),
                        members,
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct Suppression {
    /// Classes of cardinality >= k, per site.
    pub surviving: Vec<Vec<EquivalenceClass>>,
    /// Classes of cardinality < k, per site.
    pub suppressed: Vec<Vec<EquivalenceClass>>,
    /// Every member of a suppressed class, ascending.
    pub suppressed_records: Vec<usize>,
}

/// Removes every class with fewer than `k` members, whole.
pub fn suppress(merged: Vec<Vec<EquivalenceClass>>, k: u32) -> Suppression {
    let mut out = Suppression::default();
    for classes in merged {
        let (keep, drop): (Vec<_>, Vec<_>) = classes.into_iter().partition(|c| c.len() >= k as usize);
        out.suppressed_records
            .extend(drop.iter().flat_map(|c| c.members.iter().copied()));
        out.surviving.push(keep);
        out.suppressed.push(drop);
    }
    out.suppressed_records.sort_unstable();
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct AggregatedRegion {
    /// Index of the generating site.
    pub id: usize,
    pub site: Point2D,
    /// Initial-region indices, ascending.
    pub member_regions: Vec<usize>,
    pub member_region_ids: Vec<String>,
    /// Surviving classes, each of cardinality >= k.
    pub classes: Vec<EquivalenceClass>,
    /// Classes removed by suppression.
    pub suppressed_classes: Vec<EquivalenceClass>,
    pub population_after_suppression: u64,
}

impl AggregatedRegion {
    /// Every merged class before suppression, in key order.
    pub fn all_classes(&self) -> impl Iterator<Item = &EquivalenceClass> {
        let mut all: Vec<&EquivalenceClass> = self.classes.iter().chain(&self.suppressed_classes).collect();
        all.sort_by(|a, b| a.key.cmp(&b.key));
        all.into_iter()
    }
}

#[derive(Clone, Debug)]
pub struct AnonymizationResult {
    pub config: AnonymizationConfig,
    pub sites: Vec<Site>,
    /// Non-empty aggregated regions, by site index.
    pub aggregated_regions: Vec<AggregatedRegion>,
    /// Site index of each initial region.
    pub region_site: Vec<usize>,
    /// Initial-region index of each input record.
    pub record_region: Vec<usize>,
    /// Suppressed record indices, ascending.
    pub suppressed_records: Vec<usize>,
    pub suppressed_record_ids: Vec<String>,
    pub timings: PhaseTimings,
}

impl AnonymizationResult {
    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn record_count(&self) -> usize {
        self.record_region.len()
    }

    /// `(record index, initial region index, aggregated region id)` for every
    /// record that survived suppression, in input order.
    pub fn surviving(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut suppressed = self.suppressed_records.iter().peekable();
        self.record_region.iter().enumerate().filter_map(move |(i, &region)| {
            if suppressed.peek() == Some(&&i) {
                suppressed.next();
                None
            } else {
                Some((i, region, self.region_site[region]))
            }
        })
    }

    /// True when every surviving class in every aggregated region has at
    /// least k members.
    pub fn is_k_anonymous(&self) -> bool {
        let k = self.config.k as usize;
        self.aggregated_regions
            .iter()
            .all(|a| a.classes.iter().all(|c| c.len() >= k))
    }
}

/// Resolves every record's region and returns copies of the regions whose
/// population is the number of records referencing them, plus the region
/// index of each record.
pub fn bind_populations(regions: &[InitialRegion], records: &[Record]) -> Result<(Vec<InitialRegion>, Vec<usize>)> {
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(regions.len());
    for (i, r) in regions.iter().enumerate() {
        if index.insert(r.id.as_str(), i).is_some() {
            return Err(Error::Validation(format!("duplicate region id `{}`", r.id)));
        }
    }
    let mut bound: Vec<InitialRegion> = regions.to_vec();
    bound.iter_mut().for_each(|r| r.population = 0);
    let record_region = records
        .iter()
        .map(|rec| {
            let i = *index.get(rec.region_id.as_str()).ok_or_else(|| {
                Error::Validation(format!("record `{}` references unknown region `{}`", rec.id, rec.region_id))
            })?;
            bound[i].population += 1;
            Ok(i)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((bound, record_region))
}

/// Full pipeline: class computation, site placement, aggregation, suppression.
/// Phase wall-clock times are recorded in the result.
pub fn anonymize(
    regions: &[InitialRegion],
    records: &[Record],
    schema: &QuasiIdentifierSchema,
    config: &AnonymizationConfig,
) -> Result<AnonymizationResult> {
    anonymize_inner(regions, records, schema, config, None)
}

/// Same pipeline with caller-supplied sites instead of balanced-density
/// placement. `config.site_count` is ignored.
pub fn anonymize_with_sites(
    regions: &[InitialRegion],
    records: &[Record],
    schema: &QuasiIdentifierSchema,
    config: &AnonymizationConfig,
    sites: Vec<Site>,
) -> Result<AnonymizationResult> {
    anonymize_inner(regions, records, schema, config, Some(sites))
}

fn anonymize_inner(
    regions: &[InitialRegion],
    records: &[Record],
    schema: &QuasiIdentifierSchema,
    config: &AnonymizationConfig,
    fixed_sites: Option<Vec<Site>>,
) -> Result<AnonymizationResult> {
    schema.validate()?;
    if fixed_sites.is_none() {
        config.validate(regions.len())?;
    } else if config.k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut timings = PhaseTimings::default();

    let (bound, record_region) = bind_populations(regions, records)?;

    let start = Instant::now();
    let per_region = compute_equivalence_classes(records, schema, |i, _| record_region[i])?;
    timings.record("classes", start.elapsed());

    if regions.is_empty() {
        return Ok(AnonymizationResult {
            config: config.clone(),
            sites: Vec::new(),
            aggregated_regions: Vec::new(),
            region_site: Vec::new(),
            record_region,
            suppressed_records: Vec::new(),
            suppressed_record_ids: Vec::new(),
            timings,
        });
    }

    let start = Instant::now();
    let sites = match fixed_sites {
        Some(sites) => sites,
        None => {
            let total: u64 = bound.iter().map(|r| r.population).sum();
            let s = choose_site_count(total, config.k, schema.class_count(), config.site_count, bound.len())?;
            place_sites(&bound, s)?
        }
    };
    timings.record("placement", start.elapsed());

    let start = Instant::now();
    let assignment = assign_regions_to_sites(&bound, &sites)?;
    let merged = merge_classes(&assignment, &per_region);
    timings.record("aggregation", start.elapsed());

    let start = Instant::now();
    let Suppression {
        surviving,
        suppressed,
        suppressed_records,
    } = suppress(merged, config.k);
    timings.record("suppression", start.elapsed());

    let mut aggregated_regions = Vec::new();
    let mut empty_sites = Vec::new();
    for (((site, members), classes), dropped) in sites.iter().zip(&assignment.members).zip(surviving).zip(suppressed) {
        if members.is_empty() {
            empty_sites.push(site.index);
            continue;
        }
        aggregated_regions.push(AggregatedRegion {
            id: site.index,
            site: site.location,
            member_regions: members.clone(),
            member_region_ids: members.iter().map(|&r| bound[r].id.clone()).collect(),
            population_after_suppression: classes.iter().map(|c| c.len() as u64).sum(),
            classes,
            suppressed_classes: dropped,
        });
    }
    if !empty_sites.is_empty() {
        log::warn!(
            "{} of {} sites captured no initial regions and were dropped: {empty_sites:?}",
            empty_sites.len(),
            sites.len()
        );
    }

    Ok(AnonymizationResult {
        config: config.clone(),
        sites,
        aggregated_regions,
        region_site: assignment.site_of_region,
        record_region,
        suppressed_record_ids: suppressed_records.iter().map(|&i| records[i].id.clone()).collect(),
        suppressed_records,
        timings,
    })
}
