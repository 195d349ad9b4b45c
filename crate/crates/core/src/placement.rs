//! Balanced-density site placement.
//!
//! Initial-region points are cut into horizontal rows of roughly equal
//! population, each row is cut into cells whose count is proportional to the
//! row's share of the population, and one site is placed at the mean of each
//! cell's points. Cell boundaries are never materialized; rows and cells are
//! just ordered point containers.
//!
//! All "nearest integer" roundings use round-half-away-from-zero. Sort ties are
//! broken deterministically: the row sort is by `(y, x, id)` and the in-row
//! sort by `(x, y, id)`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InitialRegion, Point2D};

/// Safety factor of the default site-count heuristic.
pub const SITE_COUNT_SAFETY_FACTOR: u64 = 2;

/// One initial-region point as seen by the placement walk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlacedPoint {
    /// Index into the region slice passed to placement.
    pub region: usize,
    /// Rank of the region id in lexicographic order; used only for tie-breaks.
    pub id_rank: usize,
    pub point: Point2D,
    pub population: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub points: Vec<PlacedPoint>,
    pub population: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub points: Vec<PlacedPoint>,
    pub population: u64,
}

fn group_population(points: &[PlacedPoint]) -> u64 {
    points.iter().map(|p| p.population).sum()
}

impl Row {
    pub fn new(points: Vec<PlacedPoint>) -> Self {
        let population = group_population(&points);
        Self { points, population }
    }
}

impl Cell {
    pub fn new(points: Vec<PlacedPoint>) -> Self {
        let population = group_population(&points);
        Self { points, population }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub index: usize,
    pub location: Point2D,
}

/// Full trace of a placement run, kept for diagnostics and structural checks.
#[derive(Clone, Debug)]
pub struct Placement {
    pub initial_row_count: usize,
    pub ideal_row_population: u64,
    /// Rows exactly as produced by the row walk.
    pub walked_rows: Vec<Row>,
    /// Rows after merging down to at most `s` rows.
    pub rows: Vec<Row>,
    /// Cells per row, aligned with `rows`.
    pub cells: Vec<Vec<Cell>>,
    pub sites: Vec<Site>,
}

impl Placement {
    pub fn cell_count(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }
}

/// Number of sites to place. An explicit override wins (clamped to the
/// region count); otherwise `floor(p / (k * classes * c))` with `c = 2`,
/// clamped to `[1, region_count]`.
pub fn choose_site_count(
    total_population: u64,
    k: u32,
    schema_class_count: u64,
    override_count: Option<usize>,
    region_count: usize,
) -> Result<usize> {
    if region_count == 0 {
        return Err(Error::Config("cannot place sites without initial regions".into()));
    }
    if k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if let Some(s) = override_count {
        if s < 1 {
            return Err(Error::Config("site count must be at least 1".into()));
        }
        return Ok(s.min(region_count));
    }
    let denom = k as u128 * schema_class_count.max(1) as u128 * SITE_COUNT_SAFETY_FACTOR as u128;
    let s = (total_population as u128 / denom).min(region_count as u128) as usize;
    Ok(s.max(1))
}

pub fn initial_row_count(s: usize) -> usize {
    ((s as f64).sqrt().round() as usize).max(1)
}

/// `round(p / r)`, half away from zero.
pub fn ideal_row_population(p: u64, r: usize) -> u64 {
    let (p, r) = (p as u128, r.max(1) as u128);
    ((2 * p + r) / (2 * r)) as u64
}

/// Splits an ordered point sequence into consecutive groups, closing a group
/// whenever its running population reaches `ideal`. The point that crosses
/// the threshold stays in the group when that leaves it at least as close to
/// `ideal` as leaving it out; otherwise it opens the next group. A group is
/// never closed empty.
///
/// With `max_groups = Some(m)`, once `m - 1` groups are closed every
/// remaining point goes to the last group.
fn walk(points: &[PlacedPoint], ideal: u64, max_groups: Option<usize>) -> Vec<Vec<PlacedPoint>> {
    let mut groups = Vec::new();
    let mut current: Vec<PlacedPoint> = Vec::new();
    let mut population = 0u64;

    for &pt in points {
        if max_groups.is_some_and(|m| groups.len() + 1 >= m) {
            current.push(pt);
            continue;
        }
        let mut after = population + pt.population;
        if after >= ideal && !current.is_empty() && after - ideal > ideal - population {
            groups.push(std::mem::take(&mut current));
            after = pt.population;
            if max_groups.is_some_and(|m| groups.len() + 1 >= m) {
                current.push(pt);
                continue;
            }
        }
        current.push(pt);
        population = after;
        if population >= ideal {
            groups.push(std::mem::take(&mut current));
            population = 0;
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }
    groups
}

fn cmp_by_y(a: &PlacedPoint, b: &PlacedPoint) -> Ordering {
    a.point
        .y
        .total_cmp(&b.point.y)
        .then(a.point.x.total_cmp(&b.point.x))
        .then(a.id_rank.cmp(&b.id_rank))
}

fn cmp_by_x(a: &PlacedPoint, b: &PlacedPoint) -> Ordering {
    a.point
        .x
        .total_cmp(&b.point.x)
        .then(a.point.y.total_cmp(&b.point.y))
        .then(a.id_rank.cmp(&b.id_rank))
}

/// Row walk over points already sorted by y. The number of rows emerges from
/// the walk: a short tail becomes one final row, and a surplus simply keeps
/// producing rows.
pub fn partition_into_rows(points: &[PlacedPoint], ideal_row_population: u64) -> Vec<Row> {
    walk(points, ideal_row_population, None)
        .into_iter()
        .map(Row::new)
        .collect()
}

/// Raw cell count of one row: `max(1, round(s * row_pop / p))`.
pub fn cells_per_row(row_population: u64, total_population: u64, s: usize) -> usize {
    if total_population == 0 {
        return 1;
    }
    let (rp, p, s) = (row_population as u128, total_population as u128, s as u128);
    (((2 * s * rp + p) / (2 * p)) as usize).max(1)
}

/// Per-row cell counts summing to exactly `s`. Starts from the raw counts
/// (capped at the row's point count) and moves one cell at a time using the
/// largest-remainder rule: cells are added to the row furthest below its
/// exact quota `s * row_pop / p` and removed from the row furthest above it.
/// Requires `rows.len() <= s <= total point count`.
pub fn reconcile_cell_counts(rows: &[Row], total_population: u64, s: usize) -> Result<Vec<usize>> {
    let points: usize = rows.iter().map(|r| r.points.len()).sum();
    if rows.len() > s || s > points {
        return Err(Error::Infeasible(format!(
            "{s} cells requested over {} rows holding {points} points",
            rows.len()
        )));
    }
    let mut counts: Vec<usize> = rows
        .iter()
        .map(|r| cells_per_row(r.population, total_population, s).min(r.points.len()))
        .collect();

    // quota_i - count_i scaled by p, compared exactly.
    let p = total_population.max(1) as i128;
    let slack = |i: usize, c: usize| s as i128 * rows[i].population as i128 - c as i128 * p;

    let mut sum: usize = counts.iter().sum();
    while sum < s {
        let i = (0..rows.len())
            .filter(|&i| counts[i] < rows[i].points.len())
            .max_by(|&a, &b| slack(a, counts[a]).cmp(&slack(b, counts[b])).then(b.cmp(&a)))
            .expect("row capacity covers s");
        counts[i] += 1;
        sum += 1;
    }
    while sum > s {
        let i = (0..rows.len())
            .filter(|&i| counts[i] > 1)
            .min_by(|&a, &b| slack(a, counts[a]).cmp(&slack(b, counts[b])).then(a.cmp(&b)))
            .expect("at most s rows");
        counts[i] -= 1;
        sum -= 1;
    }
    Ok(counts)
}

/// Cuts one row into exactly `cell_count` cells along x.
///
/// The walk closes a cell each time `ideal_cell_population` is reached; once
/// only one cell remains to be created it takes every remaining point. If the
/// walk runs out of points early, the most populous cell holding at least two
/// points is split in two, repeatedly, until the count is reached.
pub fn partition_row_into_cells(row: &Row, cell_count: usize, ideal_cell_population: u64) -> Result<Vec<Cell>> {
    if cell_count == 0 || cell_count > row.points.len() {
        return Err(Error::Infeasible(format!(
            "cannot cut a row of {} points into {cell_count} cells",
            row.points.len()
        )));
    }
    let mut points = row.points.clone();
    points.sort_by(cmp_by_x);

    let mut cells: Vec<Cell> = walk(&points, ideal_cell_population, Some(cell_count))
        .into_iter()
        .map(Cell::new)
        .collect();

    while cells.len() < cell_count {
        let target = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.points.len() >= 2)
            .max_by(|(ia, a), (ib, b)| a.population.cmp(&b.population).then(ib.cmp(ia)))
            .map(|(i, _)| i)
            .expect("row holds at least cell_count points");
        let (left, right) = split_balanced(&cells[target]);
        cells[target] = left;
        cells.insert(target + 1, right);
    }
    Ok(cells)
}

/// Splits a cell of >= 2 points at the cut minimizing the population
/// difference between the halves; the leftmost such cut wins ties.
fn split_balanced(cell: &Cell) -> (Cell, Cell) {
    let total = cell.population;
    let mut best = (u64::MAX, 1);
    let mut prefix = 0u64;
    for cut in 1..cell.points.len() {
        prefix += cell.points[cut - 1].population;
        let diff = prefix.abs_diff(total - prefix);
        if diff < best.0 {
            best = (diff, cut);
        }
    }
    let (l, r) = cell.points.split_at(best.1);
    (Cell::new(l.to_vec()), Cell::new(r.to_vec()))
}

/// Site location of a cell: the arithmetic mean of its points.
pub fn cell_site(cell: &Cell) -> Point2D {
    Point2D::mean(cell.points.iter().map(|p| &p.point)).expect("cells are never empty")
}

/// Merges adjacent rows (smallest combined population first) until at most
/// `max_rows` remain.
fn merge_rows(mut rows: Vec<Row>, max_rows: usize) -> Vec<Row> {
    while rows.len() > max_rows.max(1) {
        let i = (0..rows.len() - 1)
            .min_by_key(|&i| (rows[i].population + rows[i + 1].population, i))
            .unwrap();
        let next = rows.remove(i + 1);
        rows[i].points.extend(next.points);
        rows[i].population += next.population;
    }
    rows
}

/// Runs the whole balanced-density procedure and keeps every intermediate.
///
/// When the regionalization has zero total population every point is
/// weighted 1 so the procedure still distributes sites over space.
pub fn balanced_density_placement(regions: &[InitialRegion], s: usize) -> Result<Placement> {
    if s == 0 {
        return Err(Error::Config("site count must be at least 1".into()));
    }
    if s > regions.len() {
        return Err(Error::Infeasible(format!(
            "{s} sites requested for {} initial regions",
            regions.len()
        )));
    }
    if let Some(r) = regions.iter().find(|r| !r.point.is_finite()) {
        return Err(Error::Validation(format!("region `{}` has a non-finite point", r.id)));
    }

    let uniform = regions.iter().all(|r| r.population == 0);
    let mut by_id: Vec<usize> = (0..regions.len()).collect();
    by_id.sort_by(|&a, &b| regions[a].id.cmp(&regions[b].id));
    let mut id_rank = vec![0; regions.len()];
    for (rank, &i) in by_id.iter().enumerate() {
        id_rank[i] = rank;
    }

    let mut points: Vec<PlacedPoint> = regions
        .iter()
        .enumerate()
        .map(|(i, r)| PlacedPoint {
            region: i,
            id_rank: id_rank[i],
            point: r.point,
            population: if uniform { 1 } else { r.population },
        })
        .collect();
    points.sort_by(cmp_by_y);

    let total = group_population(&points);
    let initial_rows = initial_row_count(s);
    let ideal_row = ideal_row_population(total, initial_rows);

    let walked_rows = partition_into_rows(&points, ideal_row);
    let rows = merge_rows(walked_rows.clone(), s);
    let counts = reconcile_cell_counts(&rows, total, s)?;

    let mut cells = Vec::with_capacity(rows.len());
    let mut sites = Vec::with_capacity(s);
    for (row, &count) in rows.iter().zip(&counts) {
        let ideal_cell = ideal_row_population(row.population, count);
        let row_cells = partition_row_into_cells(row, count, ideal_cell)?;
        for cell in &row_cells {
            sites.push(Site {
                index: sites.len(),
                location: cell_site(cell),
            });
        }
        cells.push(row_cells);
    }

    Ok(Placement {
        initial_row_count: initial_rows,
        ideal_row_population: ideal_row,
        walked_rows,
        rows,
        cells,
        sites,
    })
}

pub fn place_sites(regions: &[InitialRegion], s: usize) -> Result<Vec<Site>> {
    balanced_density_placement(regions, s).map(|p| p.sites)
}
