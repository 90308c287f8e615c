//! Local surface roughness: the mean absolute deviation of signed
//! point-to-plane distances within a closed-ball neighborhood, evaluated
//! per point at one or more radii.

use rayon::prelude::*;

use crate::cloud::{MetricVariant, PointCloud, RoughnessField};
use crate::error::{Error, Result};
use crate::geometry::{fit_plane_indexed, signed_point_plane_distance};
use crate::math::CompensatedSum;
use crate::spatial::{build_index, SpatialIndex};

/// Parameters of a multi-radius roughness run.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessConfig {
    /// Neighborhood radii in model units; must be strictly increasing.
    pub radii: Vec<f64>,
    /// Which scalar to report per point.
    pub variant: MetricVariant,
    /// Neighborhoods smaller than this yield an undefined value rather
    /// than a misleading zero.
    pub min_neighbors: usize,
    /// Whether the query point participates in its own neighborhood.
    pub include_self: bool,
}

impl Default for RoughnessConfig {
    fn default() -> Self {
        Self {
            radii: vec![0.2, 0.4, 0.6],
            variant: MetricVariant::Mad,
            min_neighbors: 4,
            include_self: true,
        }
    }
}

impl RoughnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::InvalidArgument("radii must not be empty".into()));
        }
        for &r in &self.radii {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "radii must be positive and finite, got {r}"
                )));
            }
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "radii must be strictly increasing".into(),
            ));
        }
        if self.min_neighbors < 3 {
            return Err(Error::InvalidArgument(format!(
                "min_neighbors must be at least 3, got {}",
                self.min_neighbors
            )));
        }
        Ok(())
    }
}

/// Roughness of one neighborhood, given its member indices.
///
/// This is the shared kernel behind [`roughness_at`] and
/// [`compute_roughness_fields`]: callers that produce the same `neighbors`
/// slice get bit-identical results regardless of how the neighbors were
/// found. Summation is compensated and follows the order of `neighbors`.
///
/// Returns `None` when the plane fit is impossible (fewer than three
/// neighbors) or degenerate (collinear/coincident neighborhood).
pub fn roughness_with_neighbors(
    points: &[[f64; 3]],
    query: [f64; 3],
    neighbors: &[usize],
    variant: MetricVariant,
) -> Option<f64> {
    let plane = fit_plane_indexed(points, neighbors).ok()?;
    match variant {
        MetricVariant::Mad => {
            let inv_n = 1.0 / neighbors.len() as f64;
            let mut sum = CompensatedSum::new();
            for &j in neighbors {
                sum.add(signed_point_plane_distance(points[j], &plane));
            }
            let mean = sum.total() * inv_n;
            let mut dev = CompensatedSum::new();
            for &j in neighbors {
                dev.add((signed_point_plane_distance(points[j], &plane) - mean).abs());
            }
            Some(dev.total() * inv_n)
        }
        MetricVariant::PointToPlane => Some(signed_point_plane_distance(query, &plane).abs()),
    }
}

/// Roughness of point `i` at radius `r`, or `None` where the neighborhood
/// is too small or degenerate. `index` must be built over `cloud`.
pub fn roughness_at(
    cloud: &PointCloud,
    index: &SpatialIndex<'_>,
    i: usize,
    r: f64,
    cfg: &RoughnessConfig,
) -> Option<f64> {
    assert!(
        std::ptr::eq(index.cloud(), cloud),
        "spatial index was built over a different cloud"
    );
    let points = cloud.points();
    let mut neighbors = index.radius_neighbors(points[i], r);
    if !cfg.include_self {
        if let Ok(pos) = neighbors.binary_search(&i) {
            neighbors.remove(pos);
        }
    }
    if neighbors.len() < cfg.min_neighbors {
        return None;
    }
    roughness_with_neighbors(points, points[i], &neighbors, cfg.variant)
}

/// Evaluate roughness for every point at every configured radius.
///
/// One spatial index is built at the largest radius and shared across all
/// radii and worker threads. Per-point evaluation is parallel; each point
/// owns its output slot, and the compensated fixed-order summation inside
/// the kernel makes the result independent of the worker count.
pub fn compute_roughness_fields(
    cloud: &PointCloud,
    cfg: &RoughnessConfig,
) -> Result<Vec<RoughnessField>> {
    cfg.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let max_radius = *cfg.radii.last().expect("validated non-empty");
    let index = build_index(cloud, max_radius)?;
    let points = cloud.points();

    let mut fields = Vec::with_capacity(cfg.radii.len());
    for &r in &cfg.radii {
        let values: Vec<Option<f64>> = (0..points.len())
            .into_par_iter()
            .map_init(Vec::new, |scratch: &mut Vec<usize>, i| {
                index.radius_neighbors_into(points[i], r, scratch);
                if !cfg.include_self {
                    if let Ok(pos) = scratch.binary_search(&i) {
                        scratch.remove(pos);
                    }
                }
                if scratch.len() < cfg.min_neighbors {
                    return None;
                }
                roughness_with_neighbors(points, points[i], scratch, cfg.variant)
            })
            .collect();
        fields.push(RoughnessField::new(r, cfg.variant, values)?);
    }
    Ok(fields)
}
