//! `rugos prep`: crop, align, and normalize a cloud, in that order, and
//! record what was done in a sidecar JSON next to the output.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rugos_core::{
    align_to_dominant_plane, crop_polygon, normalize_scale, Error, NormalizeStrategy,
    PointCloud, PolygonRegion, RigidTransform,
};
use serde_json::json;

use super::{load_cloud, save_cloud};
use crate::RunContext;

#[derive(clap::Args)]
pub struct PrepArgs {
    /// Input cloud.
    pub input: PathBuf,
    /// Output cloud; a `<output>.json` sidecar records the applied
    /// transform, scale factor, and retained-point count.
    pub output: PathBuf,
    /// Rotate the dominant plane flat (normal to +Z) and center the cloud
    /// on the plane's centroid.
    #[arg(long)]
    pub align: bool,
    /// Rescale the cloud: "bbox" makes the bounding-box diagonal 1; a
    /// number multiplies all coordinates by that factor.
    #[arg(long, value_name = "STRATEGY")]
    pub normalize: Option<String>,
    /// Polygon region file, one "x y" vertex per line ('#' comments);
    /// points outside the XY polygon are dropped first.
    #[arg(long, value_name = "FILE")]
    pub crop: Option<PathBuf>,
    /// Write ASCII PLY instead of binary.
    #[arg(long)]
    pub ascii: bool,
}

/// What preprocessing did, for the sidecar and for reports.
pub(crate) struct PrepOutcome {
    pub input_points: usize,
    pub retained_points: usize,
    pub transform: Option<RigidTransform>,
    pub scale_factor: Option<f64>,
}

/// The shared crop -> align -> normalize chain, used by both `prep` and
/// `compare`.
pub(crate) fn apply_prep(
    cloud: PointCloud,
    crop: Option<&PolygonRegion>,
    align: bool,
    normalize: Option<NormalizeStrategy>,
) -> Result<(PointCloud, PrepOutcome)> {
    let input_points = cloud.len();
    let mut cloud = cloud;

    if let Some(region) = crop {
        cloud = crop_polygon(&cloud, region);
        if cloud.is_empty() {
            return Err(Error::EmptyCloud)
                .context("the crop region excluded every point");
        }
    }

    let mut transform = None;
    if align {
        let (aligned, motion) = align_to_dominant_plane(&cloud)?;
        cloud = aligned;
        transform = Some(motion);
    }

    let mut scale_factor = None;
    if let Some(strategy) = normalize {
        let (scaled, factor) = normalize_scale(&cloud, strategy)?;
        cloud = scaled;
        scale_factor = Some(factor);
    }

    let outcome = PrepOutcome {
        input_points,
        retained_points: cloud.len(),
        transform,
        scale_factor,
    };
    Ok((cloud, outcome))
}

/// Parse the `--normalize` argument: "bbox" or a positive factor.
pub(crate) fn parse_normalize(text: &str) -> Result<NormalizeStrategy> {
    if text == "bbox" {
        return Ok(NormalizeStrategy::BboxDiagonalUnit);
    }
    match text.parse::<f64>() {
        Ok(factor) => Ok(NormalizeStrategy::ExplicitFactor(factor)),
        Err(_) => anyhow::bail!(
            "--normalize expects \"bbox\" or a positive scale factor, got {text:?}"
        ),
    }
}

/// Sidecar path: the output file name with ".json" appended, so
/// `out.ply` is described by `out.ply.json`.
fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn run(args: &PrepArgs, ctx: &RunContext) -> Result<()> {
    let cloud = load_cloud(&args.input)?;
    let region = match &args.crop {
        Some(path) => Some(
            PolygonRegion::load(path)
                .with_context(|| format!("loading crop region {}", path.display()))?,
        ),
        None => None,
    };
    let normalize = args
        .normalize
        .as_deref()
        .map(parse_normalize)
        .transpose()?;

    let (cloud, outcome) = apply_prep(cloud, region.as_ref(), args.align, normalize)?;
    save_cloud(&cloud, &args.output, args.ascii)?;

    let sidecar = json!({
        "input": args.input.display().to_string(),
        "output": args.output.display().to_string(),
        "input_points": outcome.input_points,
        "retained_points": outcome.retained_points,
        "transform": outcome.transform.as_ref().map(|t| json!({
            "rotation": t.rotation_rows(),
            "translation": t.translation_array(),
        })),
        "scale_factor": outcome.scale_factor,
        "timestamp": ctx.timestamp(),
    });
    let sidecar_file = sidecar_path(&args.output);
    std::fs::write(
        &sidecar_file,
        format!("{}\n", serde_json::to_string_pretty(&sidecar)?),
    )
    .with_context(|| format!("writing {}", sidecar_file.display()))?;

    eprintln!(
        "prepped {} -> {} ({} of {} points kept)",
        args.input.display(),
        args.output.display(),
        outcome.retained_points,
        outcome.input_points
    );
    Ok(())
}
