//! Static 2-d tree over site locations.
//!
//! Queries return the site minimizing `(squared distance, site index)`, so
//! equidistant sites resolve to the lowest index exactly as a brute-force
//! scan would.

use crate::model::Point2D;

#[derive(Clone, Copy, Debug)]
struct Node {
    point: Point2D,
    index: usize,
}

/// Balanced k-d tree stored implicitly: the median of every subslice is its
/// root, left half before it and right half after it.
#[derive(Clone, Debug)]
pub struct KdTree {
    nodes: Vec<Node>,
}

impl KdTree {
    /// Builds a tree over `points`; the position of each point in the slice is
    /// its reported index.
    pub fn new(points: &[Point2D]) -> Self {
        let mut nodes: Vec<Node> = points
            .iter()
            .enumerate()
            .map(|(index, &point)| Node { point, index })
            .collect();
        build(&mut nodes, 0);
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the nearest point, lowest index on ties. `None` when empty.
    pub fn nearest(&self, query: &Point2D) -> Option<usize> {
        let mut best = (f64::INFINITY, usize::MAX);
        search(&self.nodes, 0, query, &mut best);
        (best.1 != usize::MAX).then_some(best.1)
    }
}

fn axis_value(p: &Point2D, axis: usize) -> f64 {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}

fn build(nodes: &mut [Node], axis: usize) {
    if nodes.len() <= 1 {
        return;
    }
    let mid = nodes.len() / 2;
    nodes.select_nth_unstable_by(mid, |a, b| {
        axis_value(&a.point, axis)
            .total_cmp(&axis_value(&b.point, axis))
            .then(a.index.cmp(&b.index))
    });
    let (left, rest) = nodes.split_at_mut(mid);
    build(left, axis ^ 1);
    build(&mut rest[1..], axis ^ 1);
}

fn search(nodes: &[Node], axis: usize, query: &Point2D, best: &mut (f64, usize)) {
    if nodes.is_empty() {
        return;
    }
    let mid = nodes.len() / 2;
    let node = &nodes[mid];
    let d = query.distance_sq(&node.point);
    if d < best.0 || (d == best.0 && node.index < best.1) {
        *best = (d, node.index);
    }

    let diff = axis_value(query, axis) - axis_value(&node.point, axis);
    let (near, far) = if diff < 0.0 {
        (&nodes[..mid], &nodes[mid + 1..])
    } else {
        (&nodes[mid + 1..], &nodes[..mid])
    };
    search(near, axis ^ 1, query, best);
    // `<=` keeps equidistant candidates on the far side reachable for the
    // index tie-break.
    if diff * diff <= best.0 {
        search(far, axis ^ 1, query, best);
    }
}

/// Reference scan: minimum `(squared distance, index)` over all points.
pub fn nearest_brute_force(points: &[Point2D], query: &Point2D) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = query.distance_sq(p);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}
