//! Invariance and equivariance properties of the full pipeline: the
//! roughness metric under rigid motion and uniform scaling, preparation
//! steps under repetition, and worker-count independence.

mod common;

use common::max_defined_difference;
use nalgebra::{Rotation3, Vector3};
use rugos_core::{
    align_to_dominant_plane, apply_transform, bounding_box, compute_roughness_fields,
    crop_polygon, fit_plane, generate, normalize_scale, NormalizeStrategy, PointCloud,
    PolygonRegion, Rect2, RigidTransform, RoughnessConfig, SurfaceKind, SurfaceSpec,
};

fn rough_test_surface(seed: u64) -> PointCloud {
    let spec = SurfaceSpec {
        kind: SurfaceKind::Sinusoid {
            amplitude: 0.04,
            wavelength: 0.7,
        },
        extent: Rect2 {
            min: [0.0, 0.0],
            max: [2.0, 2.0],
        },
        density: 2_500.0,
        seed,
    };
    generate(&spec).unwrap()
}

fn scale_points(cloud: &PointCloud, s: f64) -> PointCloud {
    let scaled = cloud.points().iter().map(|p| [p[0] * s, p[1] * s, p[2] * s]);
    PointCloud::new(cloud.name(), scaled.collect()).unwrap()
}

#[test]
fn roughness_is_invariant_under_random_rigid_motions() {
    let cloud = rough_test_surface(41);
    let config = RoughnessConfig {
        radii: vec![0.2, 0.4],
        ..RoughnessConfig::default()
    };
    let baseline = compute_roughness_fields(&cloud, &config).unwrap();

    let motions = [
        RigidTransform::new(
            *Rotation3::from_euler_angles(0.3, -1.1, 2.0).matrix(),
            Vector3::new(10.0, -3.0, 0.5),
        )
        .unwrap(),
        RigidTransform::new(
            *Rotation3::from_euler_angles(-2.4, 0.02, 0.77).matrix(),
            Vector3::new(-100.0, 55.5, 12.25),
        )
        .unwrap(),
        RigidTransform::translation_by([1e3, -1e3, 1e3]),
    ];
    for (k, motion) in motions.iter().enumerate() {
        let moved = apply_transform(&cloud, motion);
        let fields = compute_roughness_fields(&moved, &config).unwrap();
        for (a, b) in baseline.iter().zip(&fields) {
            let max = max_defined_difference(a.values(), b.values());
            assert!(
                max <= 1e-9,
                "motion {k}, r={}: max deviation {max}",
                a.radius()
            );
        }
    }
}

#[test]
fn roughness_scales_linearly_with_the_cloud() {
    let cloud = rough_test_surface(42);
    let radii = [0.2, 0.4];
    let baseline = compute_roughness_fields(
        &cloud,
        &RoughnessConfig {
            radii: radii.to_vec(),
            ..RoughnessConfig::default()
        },
    )
    .unwrap();

    for s in [0.5, 2.0, 3.0, 10.0] {
        let scaled_cloud = scale_points(&cloud, s);
        let fields = compute_roughness_fields(
            &scaled_cloud,
            &RoughnessConfig {
                radii: radii.iter().map(|r| r * s).collect(),
                ..RoughnessConfig::default()
            },
        )
        .unwrap();
        for (a, b) in baseline.iter().zip(&fields) {
            for (i, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
                match (x, y) {
                    (Some(x), Some(y)) => {
                        let expected = x * s;
                        assert!(
                            (y - expected).abs() <= 1e-9 * expected.abs().max(1e-300),
                            "s={s} r={} point {i}: {y} vs {expected}",
                            a.radius()
                        );
                    }
                    (None, None) => {}
                    other => panic!("s={s} point {i}: defined-ness differs: {other:?}"),
                }
            }
        }
    }
}

#[test]
fn normalization_round_trips_through_its_inverse_factor() {
    let cloud = rough_test_surface(43);
    let (normalized, factor) = normalize_scale(&cloud, NormalizeStrategy::BboxDiagonalUnit).unwrap();
    assert!((bounding_box(&normalized).unwrap().diagonal() - 1.0).abs() < 1e-12);

    let (restored, inverse_factor) =
        normalize_scale(&normalized, NormalizeStrategy::ExplicitFactor(1.0 / factor)).unwrap();
    assert!((inverse_factor * factor - 1.0).abs() < 1e-15);
    for (a, b) in cloud.points().iter().zip(restored.points()) {
        for k in 0..3 {
            assert!(
                (a[k] - b[k]).abs() <= 1e-12 * a[k].abs().max(1.0),
                "{a:?} vs {b:?}"
            );
        }
    }
}

#[test]
fn alignment_is_idempotent() {
    // Aligning an already-aligned cloud must be a near-identity motion.
    let spec = SurfaceSpec {
        kind: SurfaceKind::NoisyPlane { sigma: 0.01 },
        extent: Rect2 {
            min: [0.0, 0.0],
            max: [3.0, 1.5],
        },
        density: 2_000.0,
        seed: 44,
    };
    let cloud = generate(&spec).unwrap();
    let tilt = RigidTransform::new(
        *Rotation3::from_euler_angles(0.6, -0.25, 1.9).matrix(),
        Vector3::new(4.0, 4.0, 4.0),
    )
    .unwrap();
    let tilted = apply_transform(&cloud, &tilt);

    let (aligned, _) = align_to_dominant_plane(&tilted).unwrap();
    let (_, second) = align_to_dominant_plane(&aligned).unwrap();

    let rotation_deviation = (second.rotation() - nalgebra::Matrix3::identity()).abs().max();
    let translation_deviation = second.translation().abs().max();
    assert!(
        rotation_deviation < 1e-9,
        "second alignment rotates by {rotation_deviation}"
    );
    assert!(
        translation_deviation < 1e-9,
        "second alignment translates by {translation_deviation}"
    );
}

#[test]
fn alignment_puts_the_dominant_plane_flat() {
    let cloud = rough_test_surface(45);
    let tilt = RigidTransform::new(
        *Rotation3::from_euler_angles(1.2, 0.4, -0.8).matrix(),
        Vector3::new(-7.0, 2.0, 13.0),
    )
    .unwrap();
    let tilted = apply_transform(&cloud, &tilt);
    let (aligned, transform) = align_to_dominant_plane(&tilted).unwrap();

    let plane = fit_plane(aligned.points()).unwrap();
    let normal = plane.normal();
    assert!(normal[2].abs() > 1.0 - 1e-9, "normal {normal:?} is not +Z");
    for k in 0..3 {
        assert!(plane.centroid()[k].abs() < 1e-9);
    }
    // The reported transform is the one that was applied.
    for (a, b) in aligned.points().iter().zip(tilted.points()) {
        let moved = transform.apply_point(*b);
        for k in 0..3 {
            assert!((a[k] - moved[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn polygon_crop_is_idempotent_at_scale() {
    let cloud = rough_test_surface(46);
    let region = PolygonRegion::new(vec![
        [0.3, 0.2],
        [1.8, 0.4],
        [1.5, 1.7],
        [0.9, 1.9],
        [0.2, 1.0],
    ])
    .unwrap();
    let once = crop_polygon(&cloud, &region);
    let twice = crop_polygon(&once, &region);
    assert!(once.len() > 1_000, "crop produced only {} points", once.len());
    assert!(once.len() < cloud.len());
    assert_eq!(once.points(), twice.points());
}

#[test]
fn roughness_is_stable_under_point_reordering() {
    // Reversing the point order permutes each field; values may move in
    // the last bits because summation order inside a neighborhood follows
    // point indices, but nothing beyond tight floating-point noise.
    let cloud = rough_test_surface(47);
    let reversed: Vec<[f64; 3]> = cloud.points().iter().rev().copied().collect();
    let reversed_cloud = PointCloud::new("reversed", reversed).unwrap();
    let config = RoughnessConfig {
        radii: vec![0.3],
        ..RoughnessConfig::default()
    };
    let forward = compute_roughness_fields(&cloud, &config).unwrap();
    let backward = compute_roughness_fields(&reversed_cloud, &config).unwrap();
    let n = cloud.len();
    for i in 0..n {
        let a = forward[0].values()[i];
        let b = backward[0].values()[n - 1 - i];
        match (a, b) {
            (Some(a), Some(b)) => assert!(
                common::close(a, b, 1e-11),
                "point {i}: {a} vs {b} after reordering"
            ),
            (None, None) => {}
            other => panic!("point {i}: defined-ness differs: {other:?}"),
        }
    }
}

#[test]
fn worker_count_does_not_change_a_single_bit() {
    let cloud = rough_test_surface(48);
    let config = RoughnessConfig {
        radii: vec![0.2, 0.45],
        ..RoughnessConfig::default()
    };
    let ambient = compute_roughness_fields(&cloud, &config).unwrap();
    for threads in [1usize, 2, 7] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let fields = pool.install(|| compute_roughness_fields(&cloud, &config).unwrap());
        for (a, b) in ambient.iter().zip(&fields) {
            assert_eq!(a.values(), b.values(), "{threads} workers, r={}", a.radius());
        }
    }
}

#[test]
fn cropping_then_aligning_then_normalizing_preserves_roughness_shape() {
    // The full preparation chain must not manufacture roughness: a noisy
    // plane stays a noisy plane (mean roughness at matching scale).
    let sigma = 0.01;
    let spec = SurfaceSpec {
        kind: SurfaceKind::NoisyPlane { sigma },
        extent: Rect2 {
            min: [0.0, 0.0],
            max: [2.0, 2.0],
        },
        density: 6_000.0,
        seed: 49,
    };
    let cloud = generate(&spec).unwrap();
    let tilt = RigidTransform::new(
        *Rotation3::from_euler_angles(0.5, 0.5, 0.5).matrix(),
        Vector3::new(3.0, -1.0, 2.0),
    )
    .unwrap();
    let tilted = apply_transform(&cloud, &tilt);

    let region =
        PolygonRegion::new(vec![[0.2, 0.2], [1.8, 0.2], [1.8, 1.8], [0.2, 1.8]]).unwrap();
    // Crop in the original (pre-tilt) frame, then tilt the cropped cloud,
    // mirroring a user who marked the region on the source data.
    let cropped = crop_polygon(&cloud, &region);
    let tilted_cropped = apply_transform(&cropped, &tilt);

    let (aligned, _) = align_to_dominant_plane(&tilted_cropped).unwrap();
    let (normalized, factor) =
        normalize_scale(&aligned, NormalizeStrategy::BboxDiagonalUnit).unwrap();

    let radius = 0.1 * factor; // the same physical neighborhood, rescaled
    let fields = compute_roughness_fields(
        &normalized,
        &RoughnessConfig {
            radii: vec![radius],
            ..RoughnessConfig::default()
        },
    )
    .unwrap();
    let stats = rugos_core::field_stats(&fields[0]).unwrap();
    let expected = sigma * (2.0 / std::f64::consts::PI).sqrt() * factor;
    assert!(
        (stats.mean - expected).abs() / expected < 0.05,
        "mean {} vs expected {expected}",
        stats.mean
    );
    // The tilted, uncropped, unnormalized route agrees after unscaling.
    let direct = compute_roughness_fields(
        &tilted,
        &RoughnessConfig {
            radii: vec![0.1],
            ..RoughnessConfig::default()
        },
    )
    .unwrap();
    let direct_mean = rugos_core::field_stats(&direct[0]).unwrap().mean;
    assert!(
        (stats.mean / factor - direct_mean).abs() / direct_mean < 0.03,
        "prepared {} vs direct {direct_mean}",
        stats.mean / factor
    );
}
