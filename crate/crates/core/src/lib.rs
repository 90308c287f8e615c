//! Point-cloud surface roughness analysis.
//!
//! This crate ingests point clouds (PLY and XYZ text files, plus Gaussian
//! splat PLY assets converted to points), prepares them for measurement
//! (cropping, alignment to the dominant plane, scale normalization), computes
//! per-point local roughness at one or more neighborhood radii, and compares
//! the resulting fields across clouds in machine- and human-readable reports.
//!
//! The central quantity is the *local roughness* of a point: the mean
//! absolute deviation of signed point-to-plane distances within the point's
//! radius neighborhood, taken against that neighborhood's best-fit plane.
//! It is invariant under rigid motion, scales linearly with the cloud, and
//! is `None` (undefined, never a garbage number) wherever a neighborhood is
//! too sparse or degenerate to fit a plane.
//!
//! # Pipeline sketch
//!
//! ```
//! use rugos_core::{
//!     compare_clouds, compute_roughness_fields, generate, Provenance, RoughnessConfig,
//!     SurfaceKind, SurfaceSpec, Rect2,
//! };
//!
//! let spec = SurfaceSpec {
//!     kind: SurfaceKind::NoisyPlane { sigma: 0.01 },
//!     extent: Rect2 { min: [0.0, 0.0], max: [2.0, 2.0] },
//!     density: 2_500.0,
//!     seed: 7,
//! };
//! let cloud = generate(&spec).unwrap();
//! let config = RoughnessConfig {
//!     radii: vec![0.2, 0.4],
//!     ..RoughnessConfig::default()
//! };
//! let fields = compute_roughness_fields(&cloud, &config).unwrap();
//! let report = compare_clouds(
//!     &[(&cloud, fields.as_slice())],
//!     Provenance::new(vec!["synthetic".into()], "1970-01-01T00:00:00Z"),
//! )
//! .unwrap();
//! assert_eq!(report.radii.len(), 2);
//! ```
//!
//! Determinism is a hard guarantee throughout: identical inputs (including
//! seeds) produce bitwise-identical clouds, fields and reports, regardless
//! of how many worker threads the process uses.

pub mod analysis;
pub mod cloud;
pub mod error;
pub mod geometry;
pub mod io;
pub mod math;
pub mod roughness;
pub mod spatial;
pub mod synth;

pub use analysis::{
    compare_clouds, field_stats, parse_report, radius_key, render_report, ComparisonReport,
    FieldStats, Histogram, Provenance, ReportFormat, HISTOGRAM_BINS,
};
pub use cloud::{
    apply_transform, bounding_box, Aabb, MetricVariant, PointCloud, RigidTransform,
    RoughnessField, ScalarValues,
};
pub use error::{Error, Result};
pub use geometry::{
    align_to_dominant_plane, crop_box, crop_polygon, estimate_normals, fit_plane,
    normalize_scale, signed_point_plane_distance, NormalizeStrategy, Plane, PolygonRegion,
};
pub use roughness::{
    compute_roughness_fields, roughness_at, roughness_with_neighbors, RoughnessConfig,
};
pub use spatial::{brute_force_neighbors, build_index, SpatialIndex};
pub use synth::{expected_roughness, generate, Rect2, SurfaceKind, SurfaceSpec};
