//! Population-agnostic comparison aggregator: sites at the centres of a
//! regular grid laid over the bounding box of the initial-region points.

use crate::model::{InitialRegion, Point2D};
use crate::placement::Site;

/// Exactly `s` sites: a `ceil(sqrt(s))`-column grid with as many rows as
/// needed, centres taken in row-major order from the bottom-left. Returns no
/// sites for empty input or `s == 0`.
pub fn uniform_grid_sites(regions: &[InitialRegion], s: usize) -> Vec<Site> {
    if regions.is_empty() || s == 0 {
        return Vec::new();
    }
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for r in regions {
        min_x = min_x.min(r.point.x);
        min_y = min_y.min(r.point.y);
        max_x = max_x.max(r.point.x);
        max_y = max_y.max(r.point.y);
    }
    let cols = (s as f64).sqrt().ceil() as usize;
    let rows = s.div_ceil(cols);
    let w = (max_x - min_x) / cols as f64;
    let h = (max_y - min_y) / rows as f64;
    (0..s)
        .map(|index| {
            let (row, col) = (index / cols, index % cols);
            Site {
                index,
                location: Point2D::new(min_x + (col as f64 + 0.5) * w, min_y + (row as f64 + 0.5) * h),
            }
        })
        .collect()
}
