//! Acceptance gate. Runs every criterion in sequence (the scaling check needs
//! an otherwise idle process) and prints one PASS/FAIL line per criterion.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::*;
use geoanon::aggregation::{assign_regions_brute_force, assign_regions_to_sites, bind_populations};
use geoanon::ingest::generate_synthetic;
use geoanon::metrics::{compactness, discernibility, non_uniform_entropy, surviving_geography};
use geoanon::placement::{balanced_density_placement, Site};
use geoanon::prelude::*;
use geoanon::scenarios::{run_scenarios, Scenario, METHOD_BASELINE, METHOD_VORONOI};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = std::result::Result<String, String>;

const K_VALUES: [u32; 4] = [2, 3, 5, 10];
const SCALING_RATIO: (f64, f64) = (1.5, 3.0);
const METRIC_TOLERANCE: f64 = 1e-9;
const FREQUENCY_TOLERANCE: f64 = 0.01;

fn say(line: &str) {
    // Written to the real stdout so the gate is visible without --nocapture.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn sites_from(points: &[Point2D]) -> Vec<Site> {
    points.iter().enumerate().map(|(index, &location)| Site { index, location }).collect()
}

/// Criteria 1 and 4 share their inputs.
fn k_anonymity_and_structure() -> (Outcome, Outcome) {
    let mut rng = rng(1001);
    let mut records_total = 0;
    let mut k_failures = Vec::new();
    let mut structure_failures = Vec::new();
    let start = Instant::now();
    for case in 0..100 {
        let n = rng.random_range(1_000..=100_000);
        let m = rng.random_range(2..=(n / 20).min(400));
        let d = rng.random_range(0..=6);
        let ds = random_dataset(&mut rng, n, m, d);
        let k = K_VALUES[rng.random_range(0..K_VALUES.len())];
        let s = rng.random_range(1..=ds.regions.len());
        records_total += ds.records.len();

        let config = AnonymizationConfig::new(k).with_sites(s).with_seed(case);
        let result = anonymize(&ds.regions, &ds.records, &ds.schema, &config).unwrap();
        if let Err(e) = check_k_anonymous(&result, &ds.records) {
            k_failures.push(format!("case {case} (n={n} m={m} d={d} k={k} s={s}): {e}"));
        }

        let (bound, _) = bind_populations(&ds.regions, &ds.records).unwrap();
        let placement = balanced_density_placement(&bound, s).unwrap();
        let checked = check_row_walk(&bound, &placement)
            .and_then(|_| check_cells(&bound, &placement, s))
            .and_then(|_| {
                if placement.sites == result.sites {
                    Ok(())
                } else {
                    Err("pipeline used different sites".into())
                }
            });
        if let Err(e) = checked {
            structure_failures.push(format!("case {case} (m={m} s={s}): {e}"));
        }
    }
    let elapsed = start.elapsed();
    let k_outcome = if !k_failures.is_empty() {
        Err(k_failures.join("; "))
    } else if elapsed > Duration::from_secs(300) {
        Err(format!("took {elapsed:.1?}, limit 5 min"))
    } else {
        Ok(format!("100 datasets, {records_total} records, {elapsed:.1?}"))
    };
    let s_outcome = if structure_failures.is_empty() {
        Ok("100 placements: s cells, none empty, inclusion rule re-walked".into())
    } else {
        Err(structure_failures.join("; "))
    };
    (k_outcome, s_outcome)
}

fn voronoi_membership() -> Outcome {
    let mut rng = rng(1002);
    let start = Instant::now();
    for case in 0..50 {
        let n = rng.random_range(1..=2000);
        let s = rng.random_range(1..=50);
        let (points, sites): (Vec<Point2D>, Vec<Point2D>) = if case % 2 == 0 {
            // Integer lattice: many exact equidistant ties.
            let side = rng.random_range(2..12);
            let lattice = |rng: &mut rand_chacha::ChaCha8Rng| {
                Point2D::new(rng.random_range(0..side) as f64, rng.random_range(0..side) as f64)
            };
            let sites: Vec<Point2D> = (0..s).map(|_| lattice(&mut rng)).collect();
            // Midpoints of site pairs are equidistant from both.
            let mut points: Vec<Point2D> = sites
                .windows(2)
                .take(n / 4)
                .map(|pair| Point2D::new((pair[0].x + pair[1].x) / 2.0, (pair[0].y + pair[1].y) / 2.0))
                .collect();
            while points.len() < n {
                points.push(lattice(&mut rng));
            }
            (points, sites)
        } else {
            let uniform = |rng: &mut rand_chacha::ChaCha8Rng| {
                Point2D::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0))
            };
            let sites = (0..s).map(|_| uniform(&mut rng)).collect();
            let points = (0..n).map(|_| uniform(&mut rng)).collect();
            (points, sites)
        };
        let regions: Vec<InitialRegion> = points
            .iter()
            .enumerate()
            .map(|(i, &p)| InitialRegion::new(format!("r{i}"), p, 1))
            .collect();
        let site_list = sites_from(&sites);
        let fast = assign_regions_to_sites(&regions, &site_list).unwrap();
        let oracle: Vec<usize> = points.iter().map(|&p| brute_nearest(&sites, p)).collect();
        if fast.site_of_region != oracle {
            return Err(format!("case {case}: assignment differs from all-pairs scan"));
        }
        if fast != assign_regions_brute_force(&regions, &site_list).unwrap() {
            return Err(format!("case {case}: reference assignment differs"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(10) {
        return Err(format!("took {elapsed:.1?}, limit 10 s"));
    }
    Ok(format!("50 instances exact, {elapsed:.1?}"))
}

fn closed_forms() -> std::result::Result<(), String> {
    let schema = QuasiIdentifierSchema::new(vec![Attribute::new("a", (0..10).map(|i| i.to_string()))]).unwrap();
    let one = |n: usize| (0..n).map(|i| InitialRegion::new(format!("r{i}"), Point2D::new(4.0 * i as f64, 0.0), 0)).collect::<Vec<_>>();

    // Classes {5, 3, 2} with k = 3.
    let mut records = Vec::new();
    for (class, size) in [5, 3, 2].into_iter().enumerate() {
        records.extend((0..size).map(|j| Record::new(format!("p{class}-{j}"), "r0", vec![class as u32])));
    }
    let result = anonymize(&one(1), &records, &schema, &AnonymizationConfig::new(3).with_sites(1)).unwrap();
    if discernibility(&result, 3) != 34 {
        return Err(format!("classes 5,3,2 at k=3 gave {}", discernibility(&result, 3)));
    }

    // Singleton classes with k = 2.
    let singles: Vec<Record> = (0..6).map(|i| Record::new(format!("p{i}"), "r0", vec![i])).collect();
    let result = anonymize(&one(1), &singles, &schema, &AnonymizationConfig::new(2).with_sites(1)).unwrap();
    if discernibility(&result, 2) != 0 {
        return Err("singleton classes are not zero".into());
    }

    // (0,0) and (4,0) in one aggregated region.
    let pair: Vec<Record> = (0..2).map(|i| Record::new(format!("p{i}"), format!("r{i}"), vec![0])).collect();
    let regions = one(2);
    let merged = anonymize(&regions, &pair, &schema, &AnonymizationConfig::new(1).with_sites(1)).unwrap();
    let c = compactness(&merged, &bind_populations(&regions, &pair).unwrap().0);
    if !rel_close(c, 4.0, METRIC_TOLERANCE) {
        return Err(format!("two-point compactness {c}"));
    }

    // One initial region per aggregated region.
    let apart = anonymize(&regions, &pair, &schema, &AnonymizationConfig::new(1).with_sites(2)).unwrap();
    let (orig, gen) = surviving_geography(&apart);
    if compactness(&apart, &regions) != 0.0 || non_uniform_entropy(&orig, &gen) != 0.0 {
        return Err("identity aggregation has non-zero compactness or entropy".into());
    }

    let h = non_uniform_entropy(&["A", "A", "B", "B"], &[0, 0, 0, 0]);
    if !rel_close(h, 4.0, METRIC_TOLERANCE) {
        return Err(format!("A,A,B,B merged gave {h} bits"));
    }
    Ok(())
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    closed_forms()?;
    let mut rng = rng(1003);
    for case in 0..50 {
        let n = rng.random_range(100..3000);
        let m = rng.random_range(2..80);
        let d = rng.random_range(0..4);
        let ds = random_dataset(&mut rng, n, m, d);
        let k = rng.random_range(1..8);
        let s = rng.random_range(1..=ds.regions.len());
        let result = anonymize(&ds.regions, &ds.records, &ds.schema, &AnonymizationConfig::new(k).with_sites(s)).unwrap();
        let (bound, _) = bind_populations(&ds.regions, &ds.records).unwrap();
        let points: Vec<Point2D> = bound.iter().map(|r| r.point).collect();

        let c = compactness(&result, &bound);
        let c_oracle = brute_compactness(&points, &result.region_site);
        if !rel_close(c, c_oracle, METRIC_TOLERANCE) {
            return Err(format!("case {case}: compactness {c} vs {c_oracle}"));
        }
        let dm = discernibility(&result, k);
        let dm_oracle = brute_discernibility(&ds.records, &result.record_region, &result.region_site, k as usize);
        if dm != dm_oracle {
            return Err(format!("case {case}: discernibility {dm} vs {dm_oracle}"));
        }
        let (orig, gen) = surviving_geography(&result);
        let h = non_uniform_entropy(&orig, &gen);
        let h_oracle = brute_entropy(&orig, &gen);
        if !rel_close(h, h_oracle, METRIC_TOLERANCE) {
            return Err(format!("case {case}: entropy {h} vs {h_oracle}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(10) {
        return Err(format!("took {elapsed:.1?}, limit 10 s"));
    }
    Ok(format!("closed forms + 50 instances within {METRIC_TOLERANCE:e}, {elapsed:.1?}"))
}

fn scaling_dataset(seed: u64, n: usize) -> (Vec<InitialRegion>, Vec<Record>, QuasiIdentifierSchema) {
    let mut rng = rng(seed);
    let m = n / 550;
    let (schema, spec) = random_schema_and_spec(&mut rng, 4, (400, 700));
    let regions: Vec<InitialRegion> = (0..m)
        .map(|i| InitialRegion::new(format!("da{i:05}"), Point2D::new(rng.random_range(0.0..1e4), rng.random_range(0.0..1e4)), 0))
        .collect();
    let (regions, records) = generate_synthetic(&regions, &spec, &schema, seed).unwrap();
    (regions, records, schema)
}

const TIMED_PHASES: [&str; 4] = ["classes", "placement", "aggregation", "suppression"];

fn timed_run(ds: &(Vec<InitialRegion>, Vec<Record>, QuasiIdentifierSchema), s: usize) -> (Duration, Duration, PhaseTimings) {
    let start = Instant::now();
    let result = anonymize(&ds.0, &ds.1, &ds.2, &AnonymizationConfig::new(5).with_sites(s)).unwrap();
    let wall = start.elapsed();
    let phases = TIMED_PHASES.iter().filter_map(|p| result.timings.get(p)).sum();
    (phases, wall, result.timings)
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn scaling() -> Outcome {
    const RUNS: usize = 7;
    const SITES: usize = 60;
    let small = scaling_dataset(1005, 100_000);
    let large = scaling_dataset(1005, 200_000);

    let mut small_phases = Vec::new();
    let mut large_phases = Vec::new();
    let mut small_wall = Duration::ZERO;
    let mut breakdown = (PhaseTimings::default(), PhaseTimings::default());
    timed_run(&small, SITES);
    for _ in 0..RUNS {
        let (p, w, t) = timed_run(&small, SITES);
        small_phases.push(p);
        small_wall = small_wall.max(w);
        breakdown.0 = t;
        let (p, _, t) = timed_run(&large, SITES);
        large_phases.push(p);
        breakdown.1 = t;
    }
    let (ts, tl) = (median(small_phases), median(large_phases));
    let ratio = tl.as_secs_f64() / ts.as_secs_f64();
    let fmt = |t: &PhaseTimings| {
        TIMED_PHASES
            .iter()
            .map(|p| format!("{p}={:.2}ms", t.get(p).unwrap_or_default().as_secs_f64() * 1e3))
            .collect::<Vec<_>>()
            .join(" ")
    };
    say(&format!("       n={} records: {}", small.1.len(), fmt(&breakdown.0)));
    say(&format!("       n={} records: {}", large.1.len(), fmt(&breakdown.1)));
    let detail = format!(
        "median {:.2}ms vs {:.2}ms, ratio {ratio:.2}, slowest 100k run {small_wall:.2?}",
        ts.as_secs_f64() * 1e3,
        tl.as_secs_f64() * 1e3
    );
    if !(SCALING_RATIO.0..=SCALING_RATIO.1).contains(&ratio) {
        return Err(format!("{detail}; ratio outside [{}, {}]", SCALING_RATIO.0, SCALING_RATIO.1));
    }
    if small_wall > Duration::from_secs(10) {
        return Err(format!("{detail}; 100k run over 10 s"));
    }
    Ok(detail)
}

fn generator_fidelity() -> Outcome {
    let mut rng = rng(1006);
    let (schema, spec) = random_schema_and_spec(&mut rng, 5, (400, 700));
    let regions: Vec<InitialRegion> = (0..200)
        .map(|i| InitialRegion::new(format!("da{i:03}"), Point2D::new(i as f64, 0.0), 0))
        .collect();
    let (regions, records) = generate_synthetic(&regions, &spec, &schema, 42).unwrap();
    if let Some(r) = regions.iter().find(|r| !(400..=700).contains(&r.population)) {
        return Err(format!("region {} has population {}", r.id, r.population));
    }
    if records.len() < 80_000 {
        return Err(format!("only {} records", records.len()));
    }
    let group = &spec.groups[geoanon::ingest::DEFAULT_GROUP];
    let mut worst: f64 = 0.0;
    for (a, attr) in schema.attributes.iter().enumerate() {
        let mut counts = vec![0usize; attr.categories.len()];
        for r in &records {
            counts[r.values[a] as usize] += 1;
        }
        for (c, cat) in attr.categories.iter().enumerate() {
            let expected = group[&attr.name].get(cat).copied().unwrap_or(0.0);
            let got = counts[c] as f64 / records.len() as f64;
            worst = worst.max((got - expected).abs());
        }
    }
    if worst > FREQUENCY_TOLERANCE {
        return Err(format!("frequency deviation {worst:.4}"));
    }
    Ok(format!("200 regions in [400, 700], {} records, max deviation {worst:.4}", records.len()))
}

fn baseline_comparison() -> Outcome {
    let mut rng = rng(1007);
    let ds = random_dataset(&mut rng, 60_000, 110, 5);
    let names: Vec<String> = ds.schema.attributes.iter().map(|a| a.name.clone()).collect();
    let mut scenarios = Vec::new();
    for (i, width) in [1, 2, 3, 4, 5].into_iter().enumerate() {
        let mut qi = names.clone();
        qi.shuffle(&mut rng);
        qi.truncate(width);
        scenarios.push(Scenario { name: format!("qi{width}"), quasi_identifiers: qi, k: K_VALUES[i % 4], sites: 10 + 8 * i });
    }
    let first = run_scenarios(&ds.regions, &ds.records, &ds.schema, &scenarios, 7);
    let second = run_scenarios(&ds.regions, &ds.records, &ds.schema, &scenarios, 7);

    say("       scenario metrics, voronoi vs uniform grid:");
    for pair in first.rows.chunks(2) {
        let (v, b) = (&pair[0], &pair[1]);
        if v.method != METHOD_VORONOI || b.method != METHOD_BASELINE {
            return Err("rows are not paired voronoi/baseline".into());
        }
        match (&v.outcome, &b.outcome) {
            (Ok(rv), Ok(rb)) => say(&format!(
                "       {:<4} k={:<2} s={:<3} compactness {:>12.1} vs {:>12.1}  suppressed {:>5} vs {:>5}  entropy {:>10.1} vs {:>10.1}",
                v.scenario, v.k, v.sites, rv.compactness, rb.compactness, rv.suppressed_count, rb.suppressed_count,
                rv.non_uniform_entropy, rb.non_uniform_entropy
            )),
            _ => return Err(format!("scenario {} failed", v.scenario)),
        }
    }
    if first.to_csv() != second.to_csv() {
        return Err("bench table differs between reruns".into());
    }
    Ok(format!("{} scenarios side by side, table byte-identical on rerun", scenarios.len()))
}

fn suppression_monotonicity() -> Outcome {
    let mut rng = rng(1008);
    for case in 0..20 {
        let n = rng.random_range(500..20_000);
        let m = rng.random_range(2..60);
        let d = rng.random_range(0..5);
        let ds = random_dataset(&mut rng, n, m, d);
        let (bound, _) = bind_populations(&ds.regions, &ds.records).unwrap();
        let sites = place_sites(&bound, rng.random_range(1..=bound.len())).unwrap();
        let counts: Vec<usize> = [1, 2, 3, 5, 10]
            .into_iter()
            .map(|k| {
                anonymize_with_sites(&ds.regions, &ds.records, &ds.schema, &AnonymizationConfig::new(k), sites.clone())
                    .unwrap()
                    .suppressed_records
                    .len()
            })
            .collect();
        if !counts.windows(2).all(|w| w[0] <= w[1]) {
            return Err(format!("case {case}: suppressed counts {counts:?}"));
        }
    }
    Ok("20 instances non-decreasing over k = 1, 2, 3, 5, 10".into())
}

#[test]
fn acceptance() {
    let (c1, c4) = k_anonymity_and_structure();
    let outcomes = [
        ("1 k-anonymity guarantee", c1),
        ("2 voronoi membership oracle", voronoi_membership()),
        ("3 metric oracles", metric_oracles()),
        ("4 balanced-density structure", c4),
        ("5 linear scaling", scaling()),
        ("6 generator fidelity", generator_fidelity()),
        ("7 baseline comparison and determinism", baseline_comparison()),
        ("8 suppression monotone in k", suppression_monotonicity()),
    ];
    let mut failed = Vec::new();
    for (name, outcome) in &outcomes {
        match outcome {
            Ok(detail) => say(&format!("PASS   {name}: {detail}")),
            Err(detail) => {
                say(&format!("FAIL   {name}: {detail}"));
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
