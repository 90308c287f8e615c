//! Gaussian-splat PLY assets: parsing the raw (pre-activation) splat
//! parameters and converting splat sets to geometric point clouds.

use std::path::Path;

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::io::ply::read_vertex_data;

/// Degree-0 spherical-harmonic basis constant: the DC color coefficient
/// maps to linear color as `0.5 + SH_C0 * coefficient`.
pub const SH_C0: f64 = 0.282_094_8;

/// Cap on the points produced by density-based sampling.
const MAX_SAMPLED_POINTS: f64 = 1e8;

/// The logistic function, the opacity activation: logit -> [0, 1].
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Higher-order spherical-harmonic coefficients, row-major: one row of
/// `columns` values per splat.
#[derive(Debug, Clone, PartialEq)]
pub struct ShCoefficients {
    columns: usize,
    values: Vec<f64>,
}

impl ShCoefficients {
    pub fn new(columns: usize, values: Vec<f64>) -> Self {
        assert!(
            columns > 0 && values.len().is_multiple_of(columns),
            "values must form whole rows"
        );
        Self { columns, values }
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.columns..(i + 1) * self.columns]
    }
}

/// A parsed splat set, exactly as stored on disk: scales are logs,
/// opacities are logits, quaternions are unnormalized (w, x, y, z).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSplatSet {
    name: String,
    centers: Vec<[f64; 3]>,
    log_scales: Vec<[f64; 3]>,
    rotations: Vec<[f64; 4]>,
    logit_opacities: Vec<f64>,
    sh_dc: Vec<[f64; 3]>,
    sh_rest: Option<ShCoefficients>,
}

impl GaussianSplatSet {
    pub fn new(
        name: impl Into<String>,
        centers: Vec<[f64; 3]>,
        log_scales: Vec<[f64; 3]>,
        rotations: Vec<[f64; 4]>,
        logit_opacities: Vec<f64>,
        sh_dc: Vec<[f64; 3]>,
        sh_rest: Option<ShCoefficients>,
    ) -> Result<Self> {
        let n = centers.len();
        let check = |what: &'static str, got: usize| {
            if got != n {
                Err(Error::LengthMismatch {
                    what,
                    got,
                    expected: n,
                })
            } else {
                Ok(())
            }
        };
        check("log_scales", log_scales.len())?;
        check("rotations", rotations.len())?;
        check("logit_opacities", logit_opacities.len())?;
        check("sh_dc", sh_dc.len())?;
        if let Some(rest) = &sh_rest {
            check("sh_rest rows", rest.values.len() / rest.columns)?;
        }
        for (i, c) in centers.iter().enumerate() {
            if !c.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinitePosition(i));
            }
        }
        Ok(Self {
            name: name.into(),
            centers,
            log_scales,
            rotations,
            logit_opacities,
            sh_dc,
            sh_rest,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[[f64; 3]] {
        &self.centers
    }

    pub fn log_scales(&self) -> &[[f64; 3]] {
        &self.log_scales
    }

    pub fn rotations(&self) -> &[[f64; 4]] {
        &self.rotations
    }

    pub fn logit_opacities(&self) -> &[f64] {
        &self.logit_opacities
    }

    pub fn sh_dc(&self) -> &[[f64; 3]] {
        &self.sh_dc
    }

    pub fn sh_rest(&self) -> Option<&ShCoefficients> {
        self.sh_rest.as_ref()
    }
}

/// How to turn splats into points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplatConversionMode {
    /// One point per splat center, no filtering.
    CentersAll,
    /// Centers of splats whose activated opacity is at least `tau`;
    /// near-transparent splats carry radiance, not geometry.
    OpacityThreshold(f64),
    /// For each splat, a number of Gaussian-distributed samples
    /// proportional to its mean activated scale (normalized by the set
    /// median), at the given rate.
    DensitySampled(f64),
}

impl Default for SplatConversionMode {
    fn default() -> Self {
        SplatConversionMode::OpacityThreshold(0.5)
    }
}

impl SplatConversionMode {
    fn validate(&self) -> Result<()> {
        match *self {
            SplatConversionMode::CentersAll => Ok(()),
            SplatConversionMode::OpacityThreshold(tau) => {
                if (0.0..=1.0).contains(&tau) {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "opacity threshold must be in [0, 1], got {tau}"
                    )))
                }
            }
            SplatConversionMode::DensitySampled(rate) => {
                if rate > 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "sampling rate must be positive and finite, got {rate}"
                    )))
                }
            }
        }
    }

    fn describe(&self) -> String {
        match *self {
            SplatConversionMode::CentersAll => "centers_all".to_string(),
            SplatConversionMode::OpacityThreshold(tau) => format!("opacity_threshold tau={tau}"),
            SplatConversionMode::DensitySampled(rate) => format!("density_sampled rate={rate}"),
        }
    }
}

/// Spelled in the order splat files conventionally declare them; reported
/// in this order when absent.
const REQUIRED_PROPERTIES: [&str; 14] = [
    "x", "y", "z", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3",
    "opacity", "f_dc_0", "f_dc_1", "f_dc_2",
];

/// Parse a splat PLY. Values are transcribed untouched: no exp on scales,
/// no logistic on opacities, no quaternion normalization.
pub fn parse_splat_ply(path: impl AsRef<Path>) -> Result<GaussianSplatSet> {
    let path = path.as_ref();
    let raw = read_vertex_data(path)?;
    let vertex = &raw.header.elements[raw.vertex_index];
    let count = vertex.count;

    let find = |name: &str| vertex.properties.iter().position(|p| p.name == name);
    let mut required = [0usize; REQUIRED_PROPERTIES.len()];
    for (k, name) in REQUIRED_PROPERTIES.iter().enumerate() {
        required[k] =
            find(name).ok_or_else(|| Error::MissingSplatProperty((*name).to_string()))?;
    }
    let col = |k: usize| &raw.columns[required[k]];

    let mut rest_columns: Vec<(usize, usize)> = vertex
        .properties
        .iter()
        .enumerate()
        .filter_map(|(idx, p)| {
            p.name
                .strip_prefix("f_rest_")
                .and_then(|suffix| suffix.parse::<usize>().ok())
                .map(|k| (k, idx))
        })
        .collect();
    rest_columns.sort_unstable();
    let sh_rest = if rest_columns.is_empty() {
        None
    } else {
        for (expected, &(k, _)) in rest_columns.iter().enumerate() {
            if k != expected {
                return Err(Error::MalformedHeader(format!(
                    "f_rest_* properties must be contiguous from f_rest_0, missing f_rest_{expected}"
                )));
            }
        }
        let columns = rest_columns.len();
        let mut values = Vec::with_capacity(count * columns);
        for row in 0..count {
            for &(_, idx) in &rest_columns {
                values.push(raw.columns[idx][row]);
            }
        }
        Some(ShCoefficients::new(columns, values))
    };

    let gather3 = |a: usize, b: usize, c: usize| -> Vec<[f64; 3]> {
        (0..count)
            .map(|r| [col(a)[r], col(b)[r], col(c)[r]])
            .collect()
    };
    let centers = gather3(0, 1, 2);
    let log_scales = gather3(3, 4, 5);
    let rotations: Vec<[f64; 4]> = (0..count)
        .map(|r| [col(6)[r], col(7)[r], col(8)[r], col(9)[r]])
        .collect();
    let logit_opacities: Vec<f64> = col(10).clone();
    let sh_dc = gather3(11, 12, 13);

    GaussianSplatSet::new(
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "splats".to_string()),
        centers,
        log_scales,
        rotations,
        logit_opacities,
        sh_dc,
        sh_rest,
    )
}

/// The splat indices a conversion mode keeps (all of them for the
/// center-based and sampling modes; opacity-filtered for the threshold
/// mode). Exposed so callers can report retained/total counts.
pub fn retained_indices(set: &GaussianSplatSet, mode: SplatConversionMode) -> Result<Vec<usize>> {
    mode.validate()?;
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(match mode {
        SplatConversionMode::CentersAll | SplatConversionMode::DensitySampled(_) => {
            (0..set.len()).collect()
        }
        SplatConversionMode::OpacityThreshold(tau) => (0..set.len())
            .filter(|&i| logistic(set.logit_opacities[i]) >= tau)
            .collect(),
    })
}

fn splat_color(dc: [f64; 3]) -> [u8; 3] {
    let channel = |c: f64| ((0.5 + SH_C0 * c).clamp(0.0, 1.0) * 255.0).round() as u8;
    [channel(dc[0]), channel(dc[1]), channel(dc[2])]
}

fn splat_rotation(q: [f64; 4]) -> nalgebra::Rotation3<f64> {
    // (w, x, y, z) on disk; zero or non-finite quaternions degrade to the
    // identity rotation rather than poisoning samples with NaN.
    let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
    Unit::try_new(quat, 1e-12)
        .unwrap_or_else(UnitQuaternion::identity)
        .to_rotation_matrix()
}

/// Convert a splat set to a point cloud.
///
/// `seed` drives the sampling RNG of [`SplatConversionMode::DensitySampled`]
/// (each splat draws from its own counter-derived stream) and is recorded
/// in the output cloud's provenance comment; the other modes ignore it.
/// Colors come from the DC spherical-harmonic coefficients:
/// `clamp(0.5 + SH_C0 * dc, 0, 1)` per channel, quantized to 8 bits.
pub fn splats_to_cloud(
    set: &GaussianSplatSet,
    mode: SplatConversionMode,
    seed: u64,
) -> Result<PointCloud> {
    let retained = retained_indices(set, mode)?;

    let mut points: Vec<[f64; 3]>;
    let mut colors: Vec<[u8; 3]>;
    let mut comment = format!(
        "converted from gaussian splats: mode={} retained={}/{}",
        mode.describe(),
        retained.len(),
        set.len()
    );

    match mode {
        SplatConversionMode::CentersAll | SplatConversionMode::OpacityThreshold(_) => {
            points = Vec::with_capacity(retained.len());
            colors = Vec::with_capacity(retained.len());
            for &i in &retained {
                points.push(set.centers[i]);
                colors.push(splat_color(set.sh_dc[i]));
            }
        }
        SplatConversionMode::DensitySampled(rate) => {
            let mean_scales: Vec<f64> = (0..set.len())
                .map(|i| {
                    let s = set.log_scales[i];
                    (s[0].exp() + s[1].exp() + s[2].exp()) / 3.0
                })
                .collect();
            if let Some(i) = mean_scales.iter().position(|s| !s.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "splat {i} has a non-finite activated scale"
                )));
            }
            let mut sorted = mean_scales.clone();
            sorted.sort_unstable_by(f64::total_cmp);
            let median = if sorted.len() % 2 == 1 {
                sorted[sorted.len() / 2]
            } else {
                0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
            };
            if !(median > 0.0 && median.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "splat scales yield a non-positive median ({median}); cannot derive sample counts"
                )));
            }
            let counts: Vec<usize> = mean_scales
                .iter()
                .map(|s| (rate * s / median).round() as usize)
                .collect();
            let total: f64 = counts.iter().map(|&c| c as f64).sum();
            if total > MAX_SAMPLED_POINTS {
                return Err(Error::InvalidArgument(format!(
                    "sampling would generate {total:.0} points, above the {MAX_SAMPLED_POINTS:.0} limit"
                )));
            }

            points = Vec::with_capacity(total as usize);
            colors = Vec::with_capacity(total as usize);
            for (i, &n) in counts.iter().enumerate() {
                if n == 0 {
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let rotation = splat_rotation(set.rotations[i]);
                let s = set.log_scales[i];
                let scale = Vector3::new(s[0].exp(), s[1].exp(), s[2].exp());
                let center = Vector3::from(set.centers[i]);
                let color = splat_color(set.sh_dc[i]);
                for _ in 0..n {
                    let u = Vector3::new(
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                    );
                    let p = center + rotation * scale.component_mul(&u);
                    points.push([p[0], p[1], p[2]]);
                    colors.push(color);
                }
            }
            comment.push_str(&format!(" seed={seed}"));
        }
    }

    let cloud = PointCloud::new(set.name(), points)?.with_comment(comment);
    if cloud.is_empty() {
        // A fully filtered set still yields a (colorless) empty cloud.
        return Ok(cloud);
    }
    cloud.with_colors(colors)
}
