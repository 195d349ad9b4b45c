//! Test-only oracles and generators. Nothing here calls into the code paths
//! it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use geoanon::aggregation::AnonymizationResult;
use geoanon::ingest::{generate_synthetic, DistributionSpec, DEFAULT_GROUP};
use geoanon::placement::{Placement, PlacedPoint};
use geoanon::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Dataset {
    pub regions: Vec<InitialRegion>,
    pub records: Vec<Record>,
    pub schema: QuasiIdentifierSchema,
}

/// Random schema with `d` attributes of 1..=5 categories and a random
/// (sometimes sparse) distribution spec over it.
pub fn random_schema_and_spec(rng: &mut ChaCha8Rng, d: usize, population_range: (u64, u64)) -> (QuasiIdentifierSchema, DistributionSpec) {
    let attributes: Vec<Attribute> = (0..d)
        .map(|a| {
            let n = rng.random_range(1..=5);
            Attribute::new(format!("q{a}"), (0..n).map(|c| format!("v{c}")))
        })
        .collect();
    let schema = QuasiIdentifierSchema::new(attributes).unwrap();
    let mut group = BTreeMap::new();
    for attr in &schema.attributes {
        let mut w: Vec<f64> = attr
            .categories
            .iter()
            .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.05..1.0) })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let total: f64 = w.iter().sum();
        let probs = attr.categories.iter().zip(&w).map(|(c, x)| (c.clone(), x / total)).collect();
        group.insert(attr.name.clone(), probs);
    }
    let spec = DistributionSpec {
        population_range,
        groups: BTreeMap::from([(DEFAULT_GROUP.to_string(), group)]),
    };
    (schema, spec)
}

/// Random region points: uniform, clustered, or on an integer lattice (which
/// produces exact coordinate ties).
pub fn random_points(rng: &mut ChaCha8Rng, m: usize) -> Vec<Point2D> {
    match rng.random_range(0..3) {
        0 => (0..m)
            .map(|_| Point2D::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)))
            .collect(),
        1 => {
            let centres: Vec<Point2D> = (0..rng.random_range(1..6))
                .map(|_| Point2D::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)))
                .collect();
            (0..m)
                .map(|_| {
                    let c = centres[rng.random_range(0..centres.len())];
                    Point2D::new(c.x + rng.random_range(-40.0..40.0), c.y + rng.random_range(-40.0..40.0))
                })
                .collect()
        }
        _ => {
            let side = ((m as f64).sqrt().ceil() as i64).max(2);
            (0..m)
                .map(|_| Point2D::new(rng.random_range(0..side) as f64, rng.random_range(0..side) as f64))
                .collect()
        }
    }
}

/// Generated dataset of roughly `n` records over `m` regions.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, m: usize, d: usize) -> Dataset {
    let mean = (n / m.max(1)).max(1) as u64;
    let range = (mean / 2, mean + mean / 2);
    let (schema, spec) = random_schema_and_spec(rng, d, range);
    let regions: Vec<InitialRegion> = random_points(rng, m)
        .into_iter()
        .enumerate()
        .map(|(i, p)| InitialRegion::new(format!("da{i:05}"), p, 0))
        .collect();
    let seed = rng.random();
    let (regions, records) = generate_synthetic(&regions, &spec, &schema, seed).unwrap();
    Dataset { regions, records, schema }
}

/// Distinct-tuple counts per scope, by plain hashing.
pub fn brute_class_sizes(records: &[Record], scope: impl Fn(&Record) -> String) -> BTreeMap<(String, Vec<u32>), usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry((scope(r), r.values.clone())).or_insert(0) += 1;
    }
    counts
}

pub fn brute_nearest(sites: &[Point2D], q: Point2D) -> usize {
    let mut best = 0;
    for i in 1..sites.len() {
        let di = (sites[i].x - q.x).powi(2) + (sites[i].y - q.y).powi(2);
        let db = (sites[best].x - q.x).powi(2) + (sites[best].y - q.y).powi(2);
        if di < db {
            best = i;
        }
    }
    best
}

/// Sum over groups of distances from each point to the group mean, with an
/// explicit double loop.
pub fn brute_compactness(points: &[Point2D], group_of: &[usize]) -> f64 {
    let groups: std::collections::BTreeSet<usize> = group_of.iter().copied().collect();
    let mut total = 0.0;
    for g in groups {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for (i, p) in points.iter().enumerate() {
            if group_of[i] == g {
                sx += p.x;
                sy += p.y;
                n += 1.0;
            }
        }
        let (cx, cy) = (sx / n, sy / n);
        for (i, p) in points.iter().enumerate() {
            if group_of[i] == g {
                total += ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt();
            }
        }
    }
    total
}

/// Frequency-table entropy: for each record, -log2(#orig / #gen).
pub fn brute_entropy(orig: &[usize], gen: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..orig.len() {
        let a = orig.iter().filter(|&&o| o == orig[i]).count() as f64;
        let b = gen.iter().filter(|&&g| g == gen[i]).count() as f64;
        total -= (a / b).ln() / std::f64::consts::LN_2;
    }
    total
}

/// Recomputes class sizes per aggregated region from scratch and sums the
/// squares of those >= k.
pub fn brute_discernibility(records: &[Record], record_region: &[usize], region_site: &[usize], k: usize) -> u64 {
    let mut sizes: HashMap<(usize, &[u32]), u64> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        *sizes.entry((region_site[record_region[i]], r.values.as_slice())).or_default() += 1;
    }
    sizes.values().filter(|&&n| n >= k as u64).map(|n| n * n).sum()
}

pub fn brute_suppressed(records: &[Record], record_region: &[usize], region_site: &[usize], k: usize) -> usize {
    let mut sizes: HashMap<(usize, &[u32]), usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        *sizes.entry((region_site[record_region[i]], r.values.as_slice())).or_default() += 1;
    }
    sizes.values().filter(|&&n| n < k).sum()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || a == b
}

/// Walk weights the placement uses: populations, or 1 each when all are zero.
fn weights(regions: &[InitialRegion]) -> Vec<u64> {
    if regions.iter().all(|r| r.population == 0) {
        vec![1; regions.len()]
    } else {
        regions.iter().map(|r| r.population).collect()
    }
}

fn y_order(regions: &[InitialRegion]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..regions.len()).collect();
    idx.sort_by(|&a, &b| {
        let (p, q) = (&regions[a], &regions[b]);
        p.point
            .y
            .partial_cmp(&q.point.y)
            .unwrap()
            .then(p.point.x.partial_cmp(&q.point.x).unwrap())
            .then(p.id.cmp(&q.id))
    });
    idx
}

fn x_key(regions: &[InitialRegion], i: usize) -> (f64, f64, &str) {
    (regions[i].point.x, regions[i].point.y, regions[i].id.as_str())
}

fn region_seq(points: &[PlacedPoint]) -> Vec<usize> {
    points.iter().map(|p| p.region).collect()
}

/// Checks the walked rows against the threshold-crossing inclusion rule
/// without re-running the walk: every non-final row either kept its
/// crossing point (and doing so was at least as close to the ideal, or the
/// row would have been empty) or closed short because adding the next row's
/// first point would have overshot by more than it undershoots.
pub fn check_row_walk(regions: &[InitialRegion], placement: &Placement) -> std::result::Result<(), String> {
    let w = weights(regions);
    let ideal = placement.ideal_row_population;
    let order = y_order(regions);
    let walked: Vec<usize> = placement.walked_rows.iter().flat_map(|r| region_seq(&r.points)).collect();
    if walked != order {
        return Err("walked rows are not the y-sorted point sequence".into());
    }
    let rows = &placement.walked_rows;
    for (ri, row) in rows.iter().enumerate() {
        if row.points.is_empty() {
            return Err(format!("row {ri} is empty"));
        }
        let pops: Vec<u64> = row.points.iter().map(|p| w[p.region]).collect();
        let total: u64 = pops.iter().sum();
        if total != row.population {
            return Err(format!("row {ri} population bookkeeping"));
        }
        let mut prefix = 0;
        for &p in &pops[..pops.len() - 1] {
            prefix += p;
            if prefix >= ideal {
                return Err(format!("row {ri} passed the ideal before its last point"));
            }
        }
        if ri + 1 == rows.len() {
            continue;
        }
        let without = total - pops[pops.len() - 1];
        let kept = total >= ideal && (pops.len() == 1 || total - ideal <= ideal - without);
        let next_first = w[rows[ri + 1].points[0].region];
        let deferred = total < ideal && total + next_first >= ideal && (total + next_first - ideal) > (ideal - total);
        if !(kept || deferred) {
            return Err(format!(
                "row {ri} boundary violates the inclusion rule (row {total}, last {}, next {next_first}, ideal {ideal})",
                pops[pops.len() - 1]
            ));
        }
    }
    Ok(())
}

/// Cell count, non-emptiness, contiguity and site locations.
pub fn check_cells(regions: &[InitialRegion], placement: &Placement, s: usize) -> std::result::Result<(), String> {
    if placement.cell_count() != s || placement.sites.len() != s {
        return Err(format!("{} cells / {} sites for s = {s}", placement.cell_count(), placement.sites.len()));
    }
    let merged: Vec<usize> = placement.rows.iter().flat_map(|r| region_seq(&r.points)).collect();
    if merged != y_order(regions) {
        return Err("rows are not contiguous y-ranges".into());
    }
    let mut site = 0;
    for (ri, (row, cells)) in placement.rows.iter().zip(&placement.cells).enumerate() {
        let mut by_x = region_seq(&row.points);
        by_x.sort_by(|&a, &b| x_key(regions, a).partial_cmp(&x_key(regions, b)).unwrap());
        let got: Vec<usize> = cells.iter().flat_map(|c| region_seq(&c.points)).collect();
        if got != by_x {
            return Err(format!("cells of row {ri} are not contiguous x-ranges"));
        }
        for cell in cells {
            if cell.points.is_empty() {
                return Err(format!("empty cell in row {ri}"));
            }
            let n = cell.points.len() as f64;
            let mx = cell.points.iter().map(|p| regions[p.region].point.x).sum::<f64>() / n;
            let my = cell.points.iter().map(|p| regions[p.region].point.y).sum::<f64>() / n;
            let loc = placement.sites[site].location;
            if !(rel_close(loc.x, mx, 1e-12) && rel_close(loc.y, my, 1e-12)) || placement.sites[site].index != site {
                return Err(format!("site {site} is not at its cell mean"));
            }
            site += 1;
        }
    }
    Ok(())
}

/// Every surviving class >= k, and surviving + suppressed = all records once.
pub fn check_k_anonymous(result: &AnonymizationResult, records: &[Record]) -> std::result::Result<(), String> {
    let k = result.config.k as usize;
    let mut seen = vec![0u8; records.len()];
    for agg in &result.aggregated_regions {
        for class in &agg.classes {
            if class.members.len() < k {
                return Err(format!("class of size {} in aggregated region {}", class.members.len(), agg.id));
            }
            for &m in &class.members {
                if records[m].values != class.key.0 || result.region_site[result.record_region[m]] != agg.id {
                    return Err("class member does not match its key or region".into());
                }
                seen[m] += 1;
            }
        }
    }
    for &m in &result.suppressed_records {
        seen[m] += 1;
    }
    if seen.iter().any(|&c| c != 1) {
        return Err("surviving and suppressed records do not partition the input".into());
    }
    Ok(())
}
