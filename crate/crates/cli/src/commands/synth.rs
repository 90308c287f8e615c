//! `rugos synth`: generate a synthetic calibration surface.

use std::path::PathBuf;

use anyhow::{Context, Result};
use rugos_core::{generate, SurfaceSpec};

use super::save_cloud;

#[derive(clap::Args)]
pub struct SynthArgs {
    /// JSON file describing the surface: kind, extent, density, seed.
    ///
    /// Example: {"kind": {"noisy_plane": {"sigma": 0.01}},
    /// "extent": {"min": [0,0], "max": [2,2]}, "density": 2500, "seed": 7}
    pub spec: PathBuf,
    /// Output cloud (.ply by default; .xyz/.txt/.csv for text).
    pub output: PathBuf,
    /// Write ASCII PLY instead of binary.
    #[arg(long)]
    pub ascii: bool,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading surface spec {}", args.spec.display()))?;
    let spec: SurfaceSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing surface spec {}", args.spec.display()))?;
    let cloud = generate(&spec)?;
    save_cloud(&cloud, &args.output, args.ascii)?;
    eprintln!(
        "generated {} points ({}) -> {}",
        cloud.len(),
        cloud.name(),
        args.output.display()
    );
    Ok(())
}
