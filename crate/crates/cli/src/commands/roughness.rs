//! `rugos roughness`: compute roughness scalar fields at one or more
//! radii and write the cloud with fields attached plus a stats JSON.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rugos_core::{compute_roughness_fields, field_stats, radius_key, RoughnessConfig};
use serde_json::json;

use super::{check_radii_fit_cloud, load_cloud, parse_radii, save_cloud};
use crate::manifest::MetricArg;
use crate::RunContext;

#[derive(clap::Args)]
pub struct RoughnessArgs {
    /// Input cloud.
    pub input: PathBuf,
    /// Output cloud with one `roughness_r<radius>` scalar field per
    /// radius; per-field statistics land in `<output>.stats.json`.
    pub output: PathBuf,
    /// Comma-separated neighborhood radii in model units, strictly
    /// increasing.
    #[arg(long, default_value = "0.2,0.4,0.6")]
    pub radii: String,
    /// Which scalar to compute per point.
    #[arg(long, value_enum, default_value = "mad")]
    pub variant: MetricArg,
    /// Neighborhoods smaller than this yield an undefined value.
    #[arg(long, value_name = "N", default_value_t = 4)]
    pub min_neighbors: usize,
    /// Write ASCII PLY instead of binary.
    #[arg(long)]
    pub ascii: bool,
}

fn stats_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".stats.json");
    PathBuf::from(name)
}

pub fn run(args: &RoughnessArgs, ctx: &RunContext) -> Result<()> {
    let cloud = load_cloud(&args.input)?;
    let radii = parse_radii(&args.radii)?;
    check_radii_fit_cloud(&cloud, &radii)?;

    let config = RoughnessConfig {
        radii,
        variant: args.variant.into(),
        min_neighbors: args.min_neighbors,
        ..RoughnessConfig::default()
    };
    let fields = compute_roughness_fields(&cloud, &config)?;

    let mut with_fields = cloud;
    let mut stats = serde_json::Map::new();
    for field in &fields {
        stats.insert(
            radius_key(field.radius()),
            serde_json::to_value(field_stats(field)?)?,
        );
        with_fields = with_fields.with_roughness_field(field)?;
    }
    save_cloud(&with_fields, &args.output, args.ascii)?;

    let doc = json!({
        "input": args.input.display().to_string(),
        "points": with_fields.len(),
        "metric_variant": config.variant.as_str(),
        "min_neighbors": config.min_neighbors,
        "fields": stats,
        "timestamp": ctx.timestamp(),
    });
    let stats_file = stats_path(&args.output);
    std::fs::write(
        &stats_file,
        format!("{}\n", serde_json::to_string_pretty(&doc)?),
    )
    .with_context(|| format!("writing {}", stats_file.display()))?;

    eprintln!(
        "computed {} roughness field(s) over {} points -> {}",
        fields.len(),
        with_fields.len(),
        args.output.display()
    );
    Ok(())
}
