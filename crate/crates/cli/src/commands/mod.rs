//! The five subcommands plus the small helpers they share.

pub mod compare;
pub mod convert;
pub mod prep;
pub mod roughness;
pub mod synth;

use std::path::Path;

use anyhow::{bail, Context, Result};
use rugos_core::io::{load_ply, load_xyz, save_ply, save_xyz, PlyFormat};
use rugos_core::{bounding_box, PointCloud};

/// Load a cloud, picking the parser from the file extension: `.xyz`,
/// `.txt`, and `.csv` are text clouds; everything else is PLY.
pub(crate) fn load_cloud(path: &Path) -> Result<PointCloud> {
    let cloud = match path.extension().and_then(|e| e.to_str()) {
        Some("xyz") | Some("txt") | Some("csv") => load_xyz(path),
        _ => load_ply(path),
    };
    cloud.with_context(|| format!("loading {}", path.display()))
}

/// Save a cloud, picking the writer from the file extension. `ascii`
/// selects ASCII PLY output; text formats are always ASCII.
pub(crate) fn save_cloud(cloud: &PointCloud, path: &Path, ascii: bool) -> Result<()> {
    let result = match path.extension().and_then(|e| e.to_str()) {
        Some("xyz") | Some("txt") | Some("csv") => save_xyz(cloud, path),
        _ => {
            let format = if ascii {
                PlyFormat::Ascii
            } else {
                PlyFormat::BinaryLittleEndian
            };
            save_ply(cloud, path, format)
        }
    };
    result.with_context(|| format!("writing {}", path.display()))
}

/// Parse a comma-separated radius list and check it is usable.
pub(crate) fn parse_radii(text: &str) -> Result<Vec<f64>> {
    let mut radii = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        let radius: f64 = token
            .parse()
            .with_context(|| format!("radius {token:?} is not a number"))?;
        radii.push(radius);
    }
    validate_radii(&radii)?;
    Ok(radii)
}

/// Radii must be positive, finite, and strictly increasing.
pub(crate) fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        bail!("at least one radius is required");
    }
    for &r in radii {
        if !(r > 0.0 && r.is_finite()) {
            bail!("radii must be positive and finite, got {r}");
        }
    }
    if !radii.windows(2).all(|pair| pair[0] < pair[1]) {
        bail!("radii must be strictly increasing");
    }
    Ok(())
}

/// A neighborhood radius beyond the cloud's own extent degenerates the
/// local plane fit into one global fit, so refuse it loudly.
pub(crate) fn check_radii_fit_cloud(cloud: &PointCloud, radii: &[f64]) -> Result<()> {
    let diagonal = bounding_box(cloud)?.diagonal();
    for &r in radii {
        if r > diagonal {
            bail!(
                "radius {r} exceeds the cloud's bounding-box diagonal ({diagonal:.6}); \
                 radii are expressed in (post-normalization) model units"
            );
        }
    }
    Ok(())
}
