//! `rugos convert`: turn a Gaussian-splat PLY into a point cloud.

use std::path::PathBuf;

use anyhow::{Context, Result};
use rugos_core::io::{parse_splat_ply, retained_indices, splats_to_cloud, SplatConversionMode};

use super::save_cloud;
use crate::RunContext;

#[derive(clap::Args)]
pub struct ConvertArgs {
    /// Input splat PLY (3D Gaussian Splatting layout).
    pub input: PathBuf,
    /// Output point cloud.
    pub output: PathBuf,
    /// Keep every splat center, ignoring opacity.
    #[arg(long, conflicts_with_all = ["opacity_threshold", "density_sampled"])]
    pub centers_all: bool,
    /// Keep centers whose activated opacity is at least TAU (0..=1).
    /// This is the default mode, with TAU = 0.5.
    #[arg(long, value_name = "TAU", conflicts_with = "density_sampled")]
    pub opacity_threshold: Option<f64>,
    /// Sample points inside each splat in proportion to its footprint,
    /// RATE points per unit of mean activated scale.
    #[arg(long, value_name = "RATE")]
    pub density_sampled: Option<f64>,
    /// Write ASCII PLY instead of binary.
    #[arg(long)]
    pub ascii: bool,
}

impl ConvertArgs {
    fn mode(&self) -> SplatConversionMode {
        if self.centers_all {
            SplatConversionMode::CentersAll
        } else if let Some(tau) = self.opacity_threshold {
            SplatConversionMode::OpacityThreshold(tau)
        } else if let Some(rate) = self.density_sampled {
            SplatConversionMode::DensitySampled(rate)
        } else {
            SplatConversionMode::default()
        }
    }
}

pub fn run(args: &ConvertArgs, ctx: &RunContext) -> Result<()> {
    let set = parse_splat_ply(&args.input)
        .with_context(|| format!("reading splat asset {}", args.input.display()))?;
    let mode = args.mode();
    let retained = retained_indices(&set, mode)?;
    let cloud = splats_to_cloud(&set, mode, ctx.seed)?;
    save_cloud(&cloud, &args.output, args.ascii)?;

    // The retained/total count is the command's datum; it goes to stdout.
    println!("retained {}/{} splats", retained.len(), set.len());
    eprintln!(
        "converted {} -> {} ({} points)",
        args.input.display(),
        args.output.display(),
        cloud.len()
    );
    Ok(())
}
