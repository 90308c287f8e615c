//! File formats: PLY (ASCII / binary little-endian) point clouds, XYZ/CSV
//! text clouds, and Gaussian-splat PLY assets with splat-to-point
//! conversion.

pub mod ply;
pub mod splat;
pub mod xyz;

pub use ply::{
    load_ply, parse_ply_header, save_ply, PlyElement, PlyFormat, PlyHeader, PlyProperty,
    PropertyKind, ScalarType,
};
pub use splat::{
    logistic, parse_splat_ply, retained_indices, splats_to_cloud, GaussianSplatSet,
    ShCoefficients, SplatConversionMode, SH_C0,
};
pub use xyz::{load_xyz, save_xyz};

/// The scalar-field name under which a roughness radius is stored in files:
/// the shortest decimal form of the radius with every non-alphanumeric
/// character replaced by `_` (so `0.2` becomes `roughness_r0_2`). Dots are
/// avoided for viewer compatibility; the shortest form trims trailing
/// zeros.
pub fn roughness_field_name(radius: f64) -> String {
    let repr = format!("{radius}");
    let sanitized: String = repr
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("roughness_r{sanitized}")
}
