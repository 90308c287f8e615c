//! Plane fitting and cloud conditioning: total-least-squares planes, normal
//! estimation, dominant-plane alignment, scale normalization and cropping.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::cloud::{bounding_box, Aabb, PointCloud, RigidTransform};
use crate::error::{Error, Result};
use crate::math::{sym_eigen_3x3, CompensatedSum};
use crate::spatial::SpatialIndex;

/// Ratio by which the middle covariance eigenvalue must exceed the smallest
/// one for a cloud to have an unambiguous dominant plane.
const DOMINANT_PLANE_EIGENVALUE_RATIO: f64 = 1.5;

/// Two eigenvalues below this fraction of the largest mark a neighborhood
/// as collinear (no unique plane).
const COLLINEAR_EIGENVALUE_FRACTION: f64 = 1e-18;

/// A total-least-squares plane fitted to a neighborhood.
///
/// The plane passes through the neighborhood centroid; the normal is the
/// eigenvector of the smallest covariance eigenvalue, with its sign chosen
/// deterministically (Z component >= 0; ties broken toward +Y, then +X).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    centroid: [f64; 3],
    normal: [f64; 3],
    /// Covariance spectrum of the fitted neighborhood, ascending.
    eigenvalues: [f64; 3],
}

impl Plane {
    pub fn centroid(&self) -> [f64; 3] {
        self.centroid
    }

    pub fn normal(&self) -> [f64; 3] {
        self.normal
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        self.eigenvalues
    }
}

/// Fit a plane to `points` by total least squares.
pub fn fit_plane(points: &[[f64; 3]]) -> Result<Plane> {
    let idx: Vec<usize> = (0..points.len()).collect();
    fit_plane_indexed(points, &idx)
}

/// Fit a plane to the subset `indices` of `points`. Summation follows the
/// order of `indices`, so a fixed index order yields bit-identical fits.
pub fn fit_plane_indexed(points: &[[f64; 3]], indices: &[usize]) -> Result<Plane> {
    let n = indices.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let inv_n = 1.0 / n as f64;

    // Two passes: centroid first, then covariance of the deviations. The
    // deviation form keeps precision for clouds far from the origin.
    let mut cx = CompensatedSum::new();
    let mut cy = CompensatedSum::new();
    let mut cz = CompensatedSum::new();
    for &i in indices {
        let p = points[i];
        cx.add(p[0]);
        cy.add(p[1]);
        cz.add(p[2]);
    }
    let centroid = [cx.total() * inv_n, cy.total() * inv_n, cz.total() * inv_n];

    let mut xx = CompensatedSum::new();
    let mut xy = CompensatedSum::new();
    let mut xz = CompensatedSum::new();
    let mut yy = CompensatedSum::new();
    let mut yz = CompensatedSum::new();
    let mut zz = CompensatedSum::new();
    for &i in indices {
        let p = points[i];
        let dx = p[0] - centroid[0];
        let dy = p[1] - centroid[1];
        let dz = p[2] - centroid[2];
        xx.add(dx * dx);
        xy.add(dx * dy);
        xz.add(dx * dz);
        yy.add(dy * dy);
        yz.add(dy * dz);
        zz.add(dz * dz);
    }
    let cov = Matrix3::new(
        xx.total() * inv_n,
        xy.total() * inv_n,
        xz.total() * inv_n,
        xy.total() * inv_n,
        yy.total() * inv_n,
        yz.total() * inv_n,
        xz.total() * inv_n,
        yz.total() * inv_n,
        zz.total() * inv_n,
    );

    let (vals, vecs) = sym_eigen_3x3(&cov);
    if vals[2] <= 0.0
        || (vals[0] < COLLINEAR_EIGENVALUE_FRACTION * vals[2]
            && vals[1] < COLLINEAR_EIGENVALUE_FRACTION * vals[2])
    {
        return Err(Error::DegenerateNeighborhood);
    }
    let normal = orient_normal(vecs.column(0).into());
    Ok(Plane {
        centroid,
        normal: [normal[0], normal[1], normal[2]],
        eigenvalues: [vals[0], vals[1], vals[2]],
    })
}

/// Deterministic sign convention for plane normals: Z component >= 0, ties
/// broken by Y >= 0, then X >= 0.
fn orient_normal(n: Vector3<f64>) -> Vector3<f64> {
    if n.z != 0.0 {
        return if n.z < 0.0 { -n } else { n };
    }
    if n.y != 0.0 {
        return if n.y < 0.0 { -n } else { n };
    }
    if n.x < 0.0 {
        -n
    } else {
        n
    }
}

/// Deterministic sign convention for in-plane axes: X component >= 0, ties
/// broken by Y >= 0, then Z >= 0.
fn orient_axis(v: Vector3<f64>) -> Vector3<f64> {
    if v.x != 0.0 {
        return if v.x < 0.0 { -v } else { v };
    }
    if v.y != 0.0 {
        return if v.y < 0.0 { -v } else { v };
    }
    if v.z < 0.0 {
        -v
    } else {
        v
    }
}

/// Signed distance from `p` to `plane`: `(p - centroid) . normal`.
pub fn signed_point_plane_distance(p: [f64; 3], plane: &Plane) -> f64 {
    let c = plane.centroid;
    let n = plane.normal;
    (p[0] - c[0]) * n[0] + (p[1] - c[1]) * n[1] + (p[2] - c[2]) * n[2]
}

/// Estimate a unit normal per point from its closed-ball neighborhood.
///
/// Points with fewer than three neighbors, or whose neighborhood is
/// collinear, get an undefined (NaN) normal. Returns the cloud with normals
/// attached plus the number of points whose normal is defined.
pub fn estimate_normals(
    cloud: &PointCloud,
    index: &SpatialIndex<'_>,
    radius: f64,
) -> Result<(PointCloud, usize)> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "normal estimation radius must be positive and finite, got {radius}"
        )));
    }
    let points = cloud.points();
    let normals: Vec<[f64; 3]> = (0..points.len())
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            index.radius_neighbors_into(points[i], radius, scratch);
            if scratch.len() < 3 {
                return [f64::NAN; 3];
            }
            match fit_plane_indexed(points, scratch) {
                Ok(plane) => plane.normal,
                Err(_) => [f64::NAN; 3],
            }
        })
        .collect();
    let defined = normals.iter().filter(|n| !n[0].is_nan()).count();
    Ok((cloud.with_replaced_normals(normals), defined))
}

/// Rigidly move a cloud so its dominant plane becomes the XY plane.
///
/// The plane fitted to the whole cloud is rotated so its normal points along
/// +Z, the centroid moves to the origin, and the direction of largest
/// in-plane spread (largest covariance eigenvalue) maps to +X. Fails with
/// [`Error::AmbiguousOrientation`] when the smallest covariance eigenvalue
/// is not clearly separated from the middle one, i.e. when no dominant plane
/// exists (spheres, blobs, collinear scans).
pub fn align_to_dominant_plane(cloud: &PointCloud) -> Result<(PointCloud, RigidTransform)> {
    let plane = match fit_plane(cloud.points()) {
        Ok(p) => p,
        Err(Error::DegenerateNeighborhood) => return Err(Error::AmbiguousOrientation),
        Err(e) => return Err(e),
    };
    let [lo, mid, _hi] = plane.eigenvalues();
    if !(mid >= DOMINANT_PLANE_EIGENVALUE_RATIO * lo && mid > lo) {
        return Err(Error::AmbiguousOrientation);
    }

    let w = Vector3::from(plane.normal());
    // Largest-eigenvalue direction, made exactly orthogonal to the normal
    // and oriented deterministically.
    let cov_main = refit_main_direction(cloud, &plane);
    let mut u = cov_main - w * cov_main.dot(&w);
    if u.norm_squared() <= f64::MIN_POSITIVE {
        return Err(Error::AmbiguousOrientation);
    }
    u.normalize_mut();
    let u = orient_axis(u);
    let v = w.cross(&u);

    // Rows map (u, v, w) onto the coordinate axes.
    let rotation = Matrix3::from_rows(&[u.transpose(), v.transpose(), w.transpose()]);
    let centroid = Vector3::from(plane.centroid());
    let transform = RigidTransform::new(rotation, -(rotation * centroid))?;
    Ok((crate::cloud::apply_transform(cloud, &transform), transform))
}

/// The eigenvector of the largest covariance eigenvalue for the whole-cloud
/// fit backing [`align_to_dominant_plane`].
fn refit_main_direction(cloud: &PointCloud, plane: &Plane) -> Vector3<f64> {
    // Recompute the covariance (the plane keeps only its spectrum) in the
    // deviation form used by the fit.
    let c = plane.centroid();
    let mut xx = CompensatedSum::new();
    let mut xy = CompensatedSum::new();
    let mut xz = CompensatedSum::new();
    let mut yy = CompensatedSum::new();
    let mut yz = CompensatedSum::new();
    let mut zz = CompensatedSum::new();
    for p in cloud.points() {
        let dx = p[0] - c[0];
        let dy = p[1] - c[1];
        let dz = p[2] - c[2];
        xx.add(dx * dx);
        xy.add(dx * dy);
        xz.add(dx * dz);
        yy.add(dy * dy);
        yz.add(dy * dz);
        zz.add(dz * dz);
    }
    let inv_n = 1.0 / cloud.len() as f64;
    let cov = Matrix3::new(
        xx.total() * inv_n,
        xy.total() * inv_n,
        xz.total() * inv_n,
        xy.total() * inv_n,
        yy.total() * inv_n,
        yz.total() * inv_n,
        xz.total() * inv_n,
        yz.total() * inv_n,
        zz.total() * inv_n,
    );
    let (_, vecs) = sym_eigen_3x3(&cov);
    vecs.column(2).into()
}

/// How to choose the scale factor in [`normalize_scale`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizeStrategy {
    /// Scale so the bounding-box diagonal becomes exactly 1.
    BboxDiagonalUnit,
    /// Multiply all coordinates by the given positive factor.
    ExplicitFactor(f64),
}

/// Uniformly scale a cloud about the origin. Returns the scaled cloud and
/// the factor applied. Normals and scalar fields are carried unchanged.
pub fn normalize_scale(
    cloud: &PointCloud,
    strategy: NormalizeStrategy,
) -> Result<(PointCloud, f64)> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let factor = match strategy {
        NormalizeStrategy::BboxDiagonalUnit => {
            let diag = bounding_box(cloud)?.diagonal();
            if diag == 0.0 {
                return Err(Error::ZeroExtent);
            }
            1.0 / diag
        }
        NormalizeStrategy::ExplicitFactor(f) => {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "scale factor must be positive and finite, got {f}"
                )));
            }
            f
        }
    };
    let points = cloud
        .points()
        .iter()
        .map(|p| [p[0] * factor, p[1] * factor, p[2] * factor])
        .collect();
    Ok((cloud.with_replaced_points(points), factor))
}

/// Keep exactly the points whose positions lie inside the closed box.
/// Point order and all per-point attributes are preserved; the result may
/// be empty.
pub fn crop_box(cloud: &PointCloud, aabb: &Aabb) -> PointCloud {
    let keep: Vec<usize> = cloud
        .points()
        .iter()
        .enumerate()
        .filter(|(_, &p)| aabb.contains(p))
        .map(|(i, _)| i)
        .collect();
    cloud.select(&keep)
}

/// A simple (non-self-intersecting) polygon in the XY plane used for
/// map-view cropping.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonRegion {
    vertices: Vec<[f64; 2]>,
}

impl PolygonRegion {
    /// Validates: at least three vertices, finite coordinates, no
    /// zero-length edges, no self-intersection.
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        for v in &vertices {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidPolygon("non-finite vertex".into()));
            }
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if a == b {
                return Err(Error::InvalidPolygon(format!(
                    "zero-length edge at vertex {i}"
                )));
            }
        }
        // Any intersection between non-adjacent edges (including endpoint
        // touches) makes the polygon non-simple.
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
                let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a1, a2, b1, b2) {
                    return Err(Error::InvalidPolygon(format!(
                        "edges {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(Self { vertices })
    }

    /// Read a polygon from a plain-text file: one `x y` vertex per line,
    /// blank lines and `#` comments ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut vertices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let x = it.next().and_then(|t| t.parse::<f64>().ok());
            let y = it.next().and_then(|t| t.parse::<f64>().ok());
            match (x, y) {
                (Some(x), Some(y)) => vertices.push([x, y]),
                _ => {
                    return Err(Error::InvalidPolygon(format!(
                        "line {}: expected two numbers",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Even-odd membership test; points on the boundary count as inside.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            if point_on_segment(self.vertices[i], self.vertices[(i + 1) % n], p) {
                return true;
            }
        }
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x_cross = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Keep exactly the points whose XY projection lies inside the polygon
/// (even-odd rule, boundary inclusive). Z is ignored.
pub fn crop_polygon(cloud: &PointCloud, region: &PolygonRegion) -> PointCloud {
    let keep: Vec<usize> = cloud
        .points()
        .iter()
        .enumerate()
        .filter(|(_, &p)| region.contains([p[0], p[1]]))
        .map(|(i, _)| i)
        .collect();
    cloud.select(&keep)
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Is `p` on the closed segment `ab`? Uses a relative tolerance on the
/// collinearity cross product so exactly representable on-edge points are
/// always recognized.
fn point_on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    let cross = cross2(a, b, p);
    let seg2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
    let ap2 = (p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2);
    if cross * cross > 1e-24 * seg2 * ap2.max(f64::MIN_POSITIVE) {
        return false;
    }
    let dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]);
    dot >= 0.0 && dot <= seg2
}

/// Standard orientation-based segment intersection, including collinear
/// overlap and endpoint touching.
fn segments_intersect(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], p4: [f64; 2]) -> bool {
    let d1 = cross2(p3, p4, p1);
    let d2 = cross2(p3, p4, p2);
    let d3 = cross2(p1, p2, p3);
    let d4 = cross2(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment_collinear(p3, p4, p1))
        || (d2 == 0.0 && on_segment_collinear(p3, p4, p2))
        || (d3 == 0.0 && on_segment_collinear(p1, p2, p3))
        || (d4 == 0.0 && on_segment_collinear(p1, p2, p4))
}

fn on_segment_collinear(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}
