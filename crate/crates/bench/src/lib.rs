//! Synthetic workloads shared by the benchmarks.

use std::collections::BTreeMap;

use geoanon::ingest::{generate_synthetic, DistributionSpec, DEFAULT_GROUP};
use geoanon::prelude::*;

pub struct Workload {
    pub regions: Vec<InitialRegion>,
    pub records: Vec<Record>,
    pub schema: QuasiIdentifierSchema,
}

/// Regions on a jittered grid with populations in [400, 700] and `d`
/// attributes of 2..=5 categories under skewed distributions.
pub fn workload(region_count: usize, d: usize, seed: u64) -> Workload {
    let attributes: Vec<Attribute> = (0..d)
        .map(|a| Attribute::new(format!("q{a}"), (0..2 + a % 4).map(|c| format!("c{c}"))))
        .collect();
    let schema = QuasiIdentifierSchema::new(attributes).expect("valid schema");

    let mut group = BTreeMap::new();
    for attr in &schema.attributes {
        let n = attr.categories.len();
        let total: f64 = (1..=n).map(|i| i as f64).sum();
        let probs = attr
            .categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), (i + 1) as f64 / total))
            .collect();
        group.insert(attr.name.clone(), probs);
    }
    let spec = DistributionSpec {
        population_range: (400, 700),
        groups: BTreeMap::from([(DEFAULT_GROUP.to_string(), group)]),
    };

    let side = (region_count as f64).sqrt().ceil() as usize;
    let regions: Vec<InitialRegion> = (0..region_count)
        .map(|i| {
            let jitter = ((i * 7919) % 97) as f64 / 97.0 - 0.5;
            let point = Point2D::new((i % side) as f64 * 100.0 + jitter * 30.0, (i / side) as f64 * 100.0 - jitter * 20.0);
            InitialRegion::new(format!("da{i:06}"), point, 0)
        })
        .collect();
    let (regions, records) = generate_synthetic(&regions, &spec, &schema, seed).expect("valid spec");
    Workload {
        regions,
        records,
        schema,
    }
}
