//! Shared helpers for the integration suites: an independent reference
//! implementation of the roughness metric (linear-scan neighbors, library
//! eigensolver, naive summation — deliberately none of the production
//! code paths), plus cloud builders and tolerance helpers.

#![allow(dead_code)]

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rugos_core::{MetricVariant, PointCloud, RoughnessConfig};

/// Linear-scan closed-ball neighbor search, ascending indices.
pub fn scan_neighbors(points: &[[f64; 3]], center: [f64; 3], radius: f64) -> Vec<usize> {
    let r2 = radius * radius;
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            let dx = p[0] - center[0];
            let dy = p[1] - center[1];
            let dz = p[2] - center[2];
            dx * dx + dy * dy + dz * dz <= r2
        })
        .map(|(i, _)| i)
        .collect()
}

/// Reference roughness at one point: naive centroid and covariance, the
/// linear-algebra library's iterative symmetric eigensolver, naive mean
/// and mean-absolute-deviation sums. Mirrors the production degeneracy
/// rule on the eigenvalue spectrum.
pub fn reference_roughness(
    points: &[[f64; 3]],
    query: usize,
    radius: f64,
    variant: MetricVariant,
    min_neighbors: usize,
) -> Option<f64> {
    let neighbors = scan_neighbors(points, points[query], radius);
    if neighbors.len() < min_neighbors {
        return None;
    }
    let n = neighbors.len() as f64;

    let mut centroid = Vector3::zeros();
    for &i in &neighbors {
        centroid += Vector3::from(points[i]);
    }
    centroid /= n;

    let mut cov = Matrix3::zeros();
    for &i in &neighbors {
        let d = Vector3::from(points[i]) - centroid;
        cov += d * d.transpose();
    }
    cov /= n;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = [
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    ];
    if vals[2] <= 0.0 || (vals[0] < 1e-18 * vals[2] && vals[1] < 1e-18 * vals[2]) {
        return None;
    }
    let normal = eig.eigenvectors.column(order[0]).into_owned();

    match variant {
        MetricVariant::Mad => {
            let distances: Vec<f64> = neighbors
                .iter()
                .map(|&i| (Vector3::from(points[i]) - centroid).dot(&normal))
                .collect();
            let mean: f64 = distances.iter().sum::<f64>() / n;
            Some(distances.iter().map(|d| (d - mean).abs()).sum::<f64>() / n)
        }
        MetricVariant::PointToPlane => {
            Some((Vector3::from(points[query]) - centroid).dot(&normal).abs())
        }
    }
}

/// Reference roughness for every point at every configured radius.
pub fn reference_fields(cloud: &PointCloud, config: &RoughnessConfig) -> Vec<Vec<Option<f64>>> {
    assert!(
        config.include_self,
        "the reference implements the default include-self contract"
    );
    config
        .radii
        .iter()
        .map(|&r| {
            (0..cloud.len())
                .map(|i| {
                    reference_roughness(
                        cloud.points(),
                        i,
                        r,
                        config.variant,
                        config.min_neighbors,
                    )
                })
                .collect()
        })
        .collect()
}

/// True when `a` and `b` agree within `rel` relative tolerance, with an
/// absolute floor of 1e-15 for values at the bottom of the scale.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    let diff = (a - b).abs();
    diff <= 1e-15 || diff <= rel * a.abs().max(b.abs())
}

/// Uniform random cloud in a centered cube of half-extent `span`.
pub fn random_box_cloud(name: &str, n: usize, span: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            [
                rng.random_range(-span..span),
                rng.random_range(-span..span),
                rng.random_range(-span..span),
            ]
        })
        .collect();
    PointCloud::new(name, points).unwrap()
}

/// Largest absolute difference between two defined-value fields, failing
/// loudly if their defined sets differ.
pub fn max_defined_difference(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut max = 0.0f64;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        match (x, y) {
            (Some(x), Some(y)) => max = max.max((x - y).abs()),
            (None, None) => {}
            _ => panic!("defined sets differ at index {i}: {x:?} vs {y:?}"),
        }
    }
    max
}
