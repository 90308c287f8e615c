//! Small numeric kernels used throughout the crate: compensated summation
//! and a closed-form eigensolver for symmetric 3x3 matrices.

use nalgebra::{Matrix3, Vector3};

/// Neumaier-compensated accumulator.
///
/// Adding values in a fixed order through this accumulator makes sums
/// reproducible and keeps the rounding error independent of the number of
/// terms, which matters when the same reduction must produce bit-identical
/// results across runs and worker counts.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Threshold below which the cross-product null-space extraction is
/// considered unreliable and an orthogonal fallback vector is used instead.
/// The input matrix is pre-scaled to unit max magnitude, so this is an
/// absolute bound on a squared cross-product norm.
const CROSS_NORM2_MIN: f64 = 1e-28;

/// Eigen-decomposition of a symmetric 3x3 matrix, closed form.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted ascending
/// and the i-th eigenvector in column i. Eigenvectors are unit length, and
/// each has a deterministic sign (its largest-magnitude component is
/// non-negative).
///
/// The eigenvalues come from the trigonometric solution of the
/// characteristic polynomial. Eigenvectors are recovered by first resolving
/// the better-isolated extreme eigenvalue from the null space of
/// `a - lambda*I` and then solving the remaining 2x2 problem restricted to
/// the orthogonal plane, which stays accurate even when the other two
/// eigenvalues are close.
pub fn sym_eigen_3x3(a: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return (Vector3::zeros(), Matrix3::identity());
    }
    let b = a / scale;

    let p1 = b[(0, 1)] * b[(0, 1)] + b[(0, 2)] * b[(0, 2)] + b[(1, 2)] * b[(1, 2)];
    if p1 == 0.0 {
        // Already diagonal: sort the diagonal entries.
        let mut pairs = [(b[(0, 0)], 0usize), (b[(1, 1)], 1), (b[(2, 2)], 2)];
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let vals = Vector3::new(pairs[0].0, pairs[1].0, pairs[2].0) * scale;
        let mut vecs = Matrix3::zeros();
        for (col, &(_, axis)) in pairs.iter().enumerate() {
            vecs[(axis, col)] = 1.0;
        }
        return (vals, vecs);
    }

    let q = b.trace() / 3.0;
    let p2 = (b[(0, 0)] - q).powi(2)
        + (b[(1, 1)] - q).powi(2)
        + (b[(2, 2)] - q).powi(2)
        + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let shifted = (b - Matrix3::from_diagonal_element(q)) / p;
    let r = (shifted.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e_hi = q + 2.0 * p * phi.cos();
    let e_lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3 * 2.0).cos();
    let e_mid = 3.0 * q - e_hi - e_lo;

    // Resolve the extreme eigenvalue with the larger gap to its neighbor
    // first; its eigenvector is the best conditioned.
    let first_is_smallest = (e_mid - e_lo) >= (e_hi - e_mid);
    let first_val = if first_is_smallest { e_lo } else { e_hi };
    let w = isolated_eigenvector(&b, first_val);
    let val_w = w.dot(&(b * w));

    // Restrict b to the plane orthogonal to w and solve the 2x2 problem.
    let u = orthogonal_unit(&w);
    let v = w.cross(&u);
    let bu = b * u;
    let bv = b * v;
    let m00 = u.dot(&bu);
    let m01 = u.dot(&bv);
    let m11 = v.dot(&bv);
    let mid = 0.5 * (m00 + m11);
    let rad = (0.25 * (m00 - m11) * (m00 - m11) + m01 * m01).sqrt();
    let lam_lo = mid - rad;
    let lam_hi = mid + rad;
    let (alpha, beta) = plane_eigvec_coords(m00, m01, m11, lam_lo);
    let x_lo = u * alpha + v * beta;
    // The second in-plane eigenvector is exactly orthogonal to the first.
    let x_hi = u * (-beta) + v * alpha;

    let mut triples: [(f64, Vector3<f64>); 3] = if first_is_smallest {
        [(val_w, w), (lam_lo, x_lo), (lam_hi, x_hi)]
    } else {
        [(lam_lo, x_lo), (lam_hi, x_hi), (val_w, w)]
    };
    triples.sort_by(|x, y| x.0.total_cmp(&y.0));

    let vals = Vector3::new(triples[0].0, triples[1].0, triples[2].0) * scale;
    let vecs = Matrix3::from_columns(&[
        deterministic_sign(triples[0].1),
        deterministic_sign(triples[1].1),
        deterministic_sign(triples[2].1),
    ]);
    (vals, vecs)
}

/// Unit null vector of `b - lambda*I` for a well-isolated eigenvalue.
///
/// The rows of a rank-2 symmetric matrix span the orthogonal complement of
/// the null space, so the largest pairwise cross product of rows points
/// along the eigenvector. When all cross products vanish the eigenvalue has
/// multiplicity >= 2 and any unit vector orthogonal to the largest row works.
fn isolated_eigenvector(b: &Matrix3<f64>, lambda: f64) -> Vector3<f64> {
    let m = b - Matrix3::from_diagonal_element(lambda);
    let r0: Vector3<f64> = m.row(0).transpose();
    let r1: Vector3<f64> = m.row(1).transpose();
    let r2: Vector3<f64> = m.row(2).transpose();
    let candidates = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let mut best = 0usize;
    let mut best_n2 = candidates[0].norm_squared();
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let n2 = c.norm_squared();
        if n2 > best_n2 {
            best = i;
            best_n2 = n2;
        }
    }
    if best_n2 > CROSS_NORM2_MIN {
        return candidates[best] / best_n2.sqrt();
    }
    // Rank <= 1: pick any unit vector orthogonal to the largest row.
    let rows = [r0, r1, r2];
    let mut r = rows[0];
    for cand in &rows[1..] {
        if cand.norm_squared() > r.norm_squared() {
            r = *cand;
        }
    }
    if r.norm_squared() <= CROSS_NORM2_MIN {
        // b is (numerically) lambda * I; every direction is an eigenvector.
        return Vector3::z();
    }
    orthogonal_unit(&r.normalize())
}

/// A unit vector orthogonal to `w` (assumed unit), built from the coordinate
/// axis least aligned with `w` so the construction is well conditioned.
fn orthogonal_unit(w: &Vector3<f64>) -> Vector3<f64> {
    let ax = w.x.abs();
    let ay = w.y.abs();
    let az = w.z.abs();
    let e = if ax <= ay && ax <= az {
        Vector3::x()
    } else if ay <= az {
        Vector3::y()
    } else {
        Vector3::z()
    };
    w.cross(&e).normalize()
}

/// Unit eigenvector coordinates (alpha, beta) of the symmetric 2x2 matrix
/// [[m00, m01], [m01, m11]] for eigenvalue `mu`, expressed in the basis the
/// matrix was built in.
fn plane_eigvec_coords(m00: f64, m01: f64, m11: f64, mu: f64) -> (f64, f64) {
    let a = (m01, mu - m00);
    let b = (mu - m11, m01);
    let na = a.0 * a.0 + a.1 * a.1;
    let nb = b.0 * b.0 + b.1 * b.1;
    let (x, y, n) = if na >= nb {
        (a.0, a.1, na)
    } else {
        (b.0, b.1, nb)
    };
    if n == 0.0 {
        // The block is mu * I; any direction is an eigenvector.
        return (1.0, 0.0);
    }
    let s = n.sqrt();
    (x / s, y / s)
}

/// Flip a vector so its largest-magnitude component is non-negative
/// (first index wins ties). Makes eigenvector signs reproducible.
fn deterministic_sign(v: Vector3<f64>) -> Vector3<f64> {
    let mut k = 0;
    for i in 1..3 {
        if v[i].abs() > v[k].abs() {
            k = i;
        }
    }
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}
