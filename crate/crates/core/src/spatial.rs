//! Fixed-radius neighbor search over a uniform grid.
//!
//! The index hashes each point into a cubic cell of edge `cell_edge`
//! (normally the largest radius that will be queried). A query gathers the
//! cells overlapping the query ball, rejects cells whose box lies entirely
//! outside the ball, then tests candidate points exactly. Results are
//! closed-ball (`distance <= radius`), include the query point itself when
//! it is a cloud point, and are returned in ascending index order.
//!
//! [`brute_force_neighbors`] is the obvious linear scan with the same
//! contract; it exists as the reference the grid is validated against.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Relative inflation applied to the radius when computing which cells to
/// scan. It covers the worst-case rounding of `coordinate / cell_edge` near
/// cell boundaries so a boundary point can never be missed; the final
/// inclusion test still uses the exact radius.
const CELL_RANGE_GUARD: f64 = 1e-12;

/// Uniform-grid spatial index borrowing an immutable cloud.
pub struct SpatialIndex<'a> {
    cloud: &'a PointCloud,
    cell_edge: f64,
    /// Point indices grouped by cell; ascending within each cell.
    entries: Vec<usize>,
    /// `offsets[slot]..offsets[slot + 1]` is the entry range of a cell.
    offsets: Vec<usize>,
    /// Cell coordinate -> slot.
    lookup: HashMap<(i64, i64, i64), usize>,
}

#[inline]
fn cell_coord(x: f64, edge: f64) -> i64 {
    (x / edge).floor() as i64
}

#[inline]
fn cell_of(p: [f64; 3], edge: f64) -> (i64, i64, i64) {
    (
        cell_coord(p[0], edge),
        cell_coord(p[1], edge),
        cell_coord(p[2], edge),
    )
}

/// Build a uniform-grid index over `cloud` with the given cell edge.
///
/// The build is deterministic: buckets depend only on point coordinates and
/// indices, not on construction parallelism.
pub fn build_index(cloud: &PointCloud, cell_edge: f64) -> Result<SpatialIndex<'_>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(cell_edge > 0.0 && cell_edge.is_finite()) {
        return Err(Error::NonPositiveCellEdge(cell_edge));
    }
    let mut pairs: Vec<((i64, i64, i64), usize)> = cloud
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, &p)| (cell_of(p, cell_edge), i))
        .collect();
    // Total order on (cell, index): the sorted result is unique, hence
    // independent of the sort's internal parallelism.
    pairs.par_sort_unstable();

    let mut entries = Vec::with_capacity(pairs.len());
    let mut offsets = Vec::new();
    let mut lookup = HashMap::new();
    let mut current: Option<(i64, i64, i64)> = None;
    for (key, idx) in pairs {
        if current != Some(key) {
            lookup.insert(key, offsets.len());
            offsets.push(entries.len());
            current = Some(key);
        }
        entries.push(idx);
    }
    offsets.push(entries.len());

    Ok(SpatialIndex {
        cloud,
        cell_edge,
        entries,
        offsets,
        lookup,
    })
}

impl<'a> SpatialIndex<'a> {
    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    pub fn cell_edge(&self) -> f64 {
        self.cell_edge
    }

    /// Number of points in the indexed cloud.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of occupied grid cells.
    pub fn occupied_cells(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Indices of all points within `radius` of `center` (closed ball),
    /// ascending. Panics if `radius` is not a positive finite length.
    pub fn radius_neighbors(&self, center: [f64; 3], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.radius_neighbors_into(center, radius, &mut out);
        out
    }

    /// Allocation-free variant of [`Self::radius_neighbors`]: clears `out`
    /// and fills it with the result.
    pub fn radius_neighbors_into(&self, center: [f64; 3], radius: f64, out: &mut Vec<usize>) {
        assert!(
            radius > 0.0 && radius.is_finite(),
            "query radius must be positive and finite"
        );
        out.clear();
        let e = self.cell_edge;
        let r2 = radius * radius;
        // Scanning the cells overlapping the (slightly inflated) ball AABB
        // is exact for any radius; with radius <= cell_edge it visits at
        // most the 3x3x3 block around the center's cell.
        let rg = radius * (1.0 + CELL_RANGE_GUARD);
        let lo = [
            cell_coord(center[0] - rg, e),
            cell_coord(center[1] - rg, e),
            cell_coord(center[2] - rg, e),
        ];
        let hi = [
            cell_coord(center[0] + rg, e),
            cell_coord(center[1] + rg, e),
            cell_coord(center[2] + rg, e),
        ];
        // Cells are rejected when their (slightly inflated) box cannot
        // intersect the ball; the slack absorbs the rounding of the
        // floor-based point-to-cell assignment.
        let slack = e * 1e-9;
        let points = self.cloud.points();
        for cx in lo[0]..=hi[0] {
            let dx = axis_box_distance(center[0], cx, e, slack);
            for cy in lo[1]..=hi[1] {
                let dy = axis_box_distance(center[1], cy, e, slack);
                let dxy = dx * dx + dy * dy;
                if dxy > r2 {
                    continue;
                }
                for cz in lo[2]..=hi[2] {
                    let dz = axis_box_distance(center[2], cz, e, slack);
                    if dxy + dz * dz > r2 {
                        continue;
                    }
                    if let Some(&slot) = self.lookup.get(&(cx, cy, cz)) {
                        let range = self.offsets[slot]..self.offsets[slot + 1];
                        for &i in &self.entries[range] {
                            if dist2(points[i], center) <= r2 {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

/// Distance from `x` to the interval of cell `c` along one axis, with the
/// interval inflated by `slack` on both sides. Zero inside the interval.
#[inline]
fn axis_box_distance(x: f64, c: i64, edge: f64, slack: f64) -> f64 {
    let lo = c as f64 * edge - slack;
    let hi = (c as f64 + 1.0) * edge + slack;
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

#[inline]
fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Linear-scan reference for [`SpatialIndex::radius_neighbors`]: same
/// closed-ball contract, same ascending order. Panics if `radius` is not a
/// positive finite length.
pub fn brute_force_neighbors(cloud: &PointCloud, center: [f64; 3], radius: f64) -> Vec<usize> {
    assert!(
        radius > 0.0 && radius.is_finite(),
        "query radius must be positive and finite"
    );
    let r2 = radius * radius;
    cloud
        .points()
        .iter()
        .enumerate()
        .filter(|(_, &p)| dist2(p, center) <= r2)
        .map(|(i, _)| i)
        .collect()
}
