//! Core value types: point clouds, bounding boxes, rigid transforms and
//! roughness fields.
//!
//! A [`PointCloud`] is immutable after construction: all "mutating"
//! operations consume the cloud (builder style) or return a new cloud, so a
//! cloud that has been shared can never change underneath a spatial index
//! built over it.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::roughness_field_name;

/// Per-point scalar values; `None` marks a point whose value is undefined
/// (for example, too few neighbors to evaluate a metric there). Undefined is
/// an explicit state, never a garbage number.
pub type ScalarValues = Vec<Option<f64>>;

/// An immutable point cloud with optional per-point attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    name: String,
    comments: Vec<String>,
    points: Vec<[f64; 3]>,
    colors: Option<Vec<[u8; 3]>>,
    /// Unit normals; a NaN triple marks a point with no defined normal.
    normals: Option<Vec<[f64; 3]>>,
    scalar_fields: BTreeMap<String, ScalarValues>,
}

impl PointCloud {
    /// Create a cloud from positions. Every coordinate must be finite.
    pub fn new(name: impl Into<String>, points: Vec<[f64; 3]>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinitePosition(i));
            }
        }
        Ok(Self {
            name: name.into(),
            comments: Vec::new(),
            points,
            colors: None,
            normals: None,
            scalar_fields: BTreeMap::new(),
        })
    }

    /// Attach RGB colors (one triple per point).
    pub fn with_colors(mut self, colors: Vec<[u8; 3]>) -> Result<Self> {
        if colors.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                what: "colors",
                got: colors.len(),
                expected: self.points.len(),
            });
        }
        self.colors = Some(colors);
        Ok(self)
    }

    /// Attach normals (one per point). Each normal must be unit length
    /// within 1e-6, or an all-NaN triple marking an undefined normal.
    pub fn with_normals(mut self, normals: Vec<[f64; 3]>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                what: "normals",
                got: normals.len(),
                expected: self.points.len(),
            });
        }
        for (i, n) in normals.iter().enumerate() {
            if n.iter().all(|c| c.is_nan()) {
                continue;
            }
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            // A partially-NaN triple has a NaN norm and must fail too.
            if norm.is_nan() || (norm - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "normal at index {i} is not unit length (|n| = {norm})"
                )));
            }
        }
        self.normals = Some(normals);
        Ok(self)
    }

    /// Attach (or replace) a named scalar field.
    pub fn with_scalar_field(
        mut self,
        name: impl Into<String>,
        values: ScalarValues,
    ) -> Result<Self> {
        if values.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                what: "scalar field",
                got: values.len(),
                expected: self.points.len(),
            });
        }
        self.scalar_fields.insert(name.into(), values);
        Ok(self)
    }

    /// Attach a roughness field as a scalar field under its canonical name
    /// (see [`crate::io::roughness_field_name`]).
    pub fn with_roughness_field(self, field: &RoughnessField) -> Result<Self> {
        let name = field.field_name();
        self.with_scalar_field(name, field.values().to_vec())
    }

    /// Replace the cloud name.
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Append a free-form provenance comment (carried into saved files).
    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comments.push(comment.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[[f64; 3]]> {
        self.normals.as_deref()
    }

    pub fn scalar_fields(&self) -> &BTreeMap<String, ScalarValues> {
        &self.scalar_fields
    }

    pub fn scalar_field(&self, name: &str) -> Option<&[Option<f64>]> {
        self.scalar_fields.get(name).map(|v| v.as_slice())
    }

    /// New cloud containing exactly the points at `indices` (in the given
    /// order), with all per-point attributes subset accordingly.
    pub(crate) fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            name: self.name.clone(),
            comments: self.comments.clone(),
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
            normals: self
                .normals
                .as_ref()
                .map(|n| indices.iter().map(|&i| n[i]).collect()),
            scalar_fields: self
                .scalar_fields
                .iter()
                .map(|(k, v)| (k.clone(), indices.iter().map(|&i| v[i]).collect()))
                .collect(),
        }
    }

    /// Internal constructor for operations that transform positions but keep
    /// every other attribute. `points` must be the same length as `self`.
    pub(crate) fn with_replaced_points(&self, points: Vec<[f64; 3]>) -> PointCloud {
        debug_assert_eq!(points.len(), self.points.len());
        PointCloud {
            name: self.name.clone(),
            comments: self.comments.clone(),
            points,
            colors: self.colors.clone(),
            normals: self.normals.clone(),
            scalar_fields: self.scalar_fields.clone(),
        }
    }

    /// Internal constructor replacing the normals wholesale.
    pub(crate) fn with_replaced_normals(&self, normals: Vec<[f64; 3]>) -> PointCloud {
        debug_assert_eq!(normals.len(), self.points.len());
        PointCloud {
            name: self.name.clone(),
            comments: self.comments.clone(),
            points: self.points.clone(),
            colors: self.colors.clone(),
            normals: Some(normals),
            scalar_fields: self.scalar_fields.clone(),
        }
    }
}

/// Axis-aligned bounding box (closed on all faces).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    /// `min` must be component-wise <= `max` and all coordinates finite.
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        let finite = min.iter().chain(max.iter()).all(|c| c.is_finite());
        if !finite {
            return Err(Error::InvalidArgument(
                "bounding box coordinates must be finite".into(),
            ));
        }
        if (0..3).any(|k| min[k] > max[k]) {
            return Err(Error::InvalidArgument(
                "bounding box min must not exceed max".into(),
            ));
        }
        Ok(Self { min, max })
    }

    /// Closed-box membership: boundary points are inside.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// Euclidean length of the main diagonal.
    pub fn diagonal(&self) -> f64 {
        let dx = self.max[0] - self.min[0];
        let dy = self.max[1] - self.min[1];
        let dz = self.max[2] - self.min[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Tightest axis-aligned bounding box of a cloud.
pub fn bounding_box(cloud: &PointCloud) -> Result<Aabb> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for p in cloud.points() {
        for k in 0..3 {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
    }
    Ok(Aabb { min, max })
}

/// Maximum allowed deviation of `R^T R` from identity (and of `det R` from
/// +1) for a matrix to count as a rotation.
const ROTATION_TOL: f64 = 1e-12;

/// A proper rigid motion: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    /// Validates that `rotation` is orthonormal with determinant +1
    /// (within 1e-12).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        let ortho_dev = (gram - Matrix3::identity()).abs().max();
        let det_dev = (rotation.determinant() - 1.0).abs();
        let deviation = ortho_dev.max(det_dev);
        if deviation > ROTATION_TOL {
            return Err(Error::InvalidRotation { deviation });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Pure translation.
    pub fn translation_by(t: [f64; 3]) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::new(t[0], t[1], t[2]),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.translation
    }

    /// Rotation as row-major nested arrays (for serialization).
    pub fn rotation_rows(&self) -> [[f64; 3]; 3] {
        let r = &self.rotation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ]
    }

    pub fn translation_array(&self) -> [f64; 3] {
        [
            self.translation[0],
            self.translation[1],
            self.translation[2],
        ]
    }

    #[inline]
    pub fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.rotation * Vector3::new(p[0], p[1], p[2]) + self.translation;
        [v[0], v[1], v[2]]
    }

    #[inline]
    pub fn apply_vector(&self, v: [f64; 3]) -> [f64; 3] {
        let r = self.rotation * Vector3::new(v[0], v[1], v[2]);
        [r[0], r[1], r[2]]
    }

    /// The inverse motion. Composing with it recovers the identity up to
    /// floating-point rounding.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

/// Apply a rigid motion to a cloud: positions are rotated and translated,
/// normals are rotated (undefined NaN normals stay undefined), and all other
/// attributes are carried unchanged.
pub fn apply_transform(cloud: &PointCloud, transform: &RigidTransform) -> PointCloud {
    let points = cloud
        .points()
        .iter()
        .map(|&p| transform.apply_point(p))
        .collect();
    let mut out = cloud.with_replaced_points(points);
    if let Some(normals) = cloud.normals() {
        let rotated = normals
            .iter()
            .map(|&n| transform.apply_vector(n))
            .collect();
        out = out.with_replaced_normals(rotated);
    }
    out
}

/// Which local roughness statistic a field holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricVariant {
    /// Mean absolute deviation of signed point-to-plane distances within the
    /// neighborhood (the primary roughness metric).
    Mad,
    /// Absolute distance of the query point itself to the neighborhood's
    /// best-fit plane.
    PointToPlane,
}

impl MetricVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricVariant::Mad => "mad",
            MetricVariant::PointToPlane => "point_to_plane",
        }
    }
}

/// A per-point roughness field computed at one neighborhood radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessField {
    radius: f64,
    variant: MetricVariant,
    values: ScalarValues,
    defined_count: usize,
}

impl RoughnessField {
    /// Defined values must be finite and non-negative; the radius must be a
    /// positive finite length.
    pub fn new(radius: f64, variant: MetricVariant, values: ScalarValues) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "roughness radius must be positive and finite, got {radius}"
            )));
        }
        let mut defined_count = 0;
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = v {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "roughness value at index {i} must be finite and >= 0, got {v}"
                    )));
                }
                defined_count += 1;
            }
        }
        Ok(Self {
            radius,
            variant,
            values,
            defined_count,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn variant(&self) -> MetricVariant {
        self.variant
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn defined_count(&self) -> usize {
        self.defined_count
    }

    pub fn undefined_count(&self) -> usize {
        self.values.len() - self.defined_count
    }

    /// Canonical scalar-field name for this radius, e.g. `roughness_r0_2`.
    pub fn field_name(&self) -> String {
        roughness_field_name(self.radius)
    }
}
