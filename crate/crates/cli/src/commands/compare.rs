//! `rugos compare`: run convert -> prep -> roughness over every cloud in
//! a manifest, then render one comparison report.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use rugos_core::io::parse_splat_ply;
use rugos_core::io::splats_to_cloud;
use rugos_core::{
    compare_clouds, compute_roughness_fields, render_report, PointCloud, PolygonRegion,
    Provenance, ReportFormat, RoughnessConfig, RoughnessField,
};

use super::{check_radii_fit_cloud, load_cloud, save_cloud, validate_radii};
use crate::manifest::{resolve, CloudEntry, PipelineManifest};
use crate::RunContext;

#[derive(clap::Args)]
pub struct CompareArgs {
    /// Manifest JSON listing the clouds and the shared settings.
    pub manifest: PathBuf,
    /// Report format, printed to standard output (and written into the
    /// manifest's output directory when one is set).
    #[arg(long, value_enum, default_value = "md")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Md,
}

impl FormatArg {
    fn as_report_format(self) -> ReportFormat {
        match self {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Md => ReportFormat::Markdown,
        }
    }

    fn extension(self) -> &'static str {
        match self {
            FormatArg::Json => "json",
            FormatArg::Csv => "csv",
            FormatArg::Md => "md",
        }
    }
}

pub fn run(args: &CompareArgs, ctx: &RunContext) -> Result<()> {
    let manifest = PipelineManifest::load(&args.manifest)?;
    let base = match args.manifest.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => dir,
        _ => Path::new("."),
    };
    let config = manifest.roughness.to_config();
    validate_radii(&config.radii)?;

    let output_dir = match &manifest.output_dir {
        Some(dir) => {
            let dir = resolve(base, dir);
            std::fs::create_dir_all(&dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
            Some(dir)
        }
        None => None,
    };

    let crop = match &manifest.prep.crop {
        Some(path) => {
            let path = resolve(base, path);
            Some(
                PolygonRegion::load(&path)
                    .with_context(|| format!("loading crop region {}", path.display()))?,
            )
        }
        None => None,
    };

    // Clouds are independent until report assembly; process them in
    // parallel, then surface the first failure in manifest order.
    let results: Vec<Result<(PointCloud, Vec<RoughnessField>)>> = manifest
        .clouds
        .par_iter()
        .map(|entry| {
            process_cloud(
                entry,
                base,
                crop.as_ref(),
                &manifest,
                &config,
                ctx,
                output_dir.as_deref(),
            )
        })
        .collect();
    let mut processed = Vec::with_capacity(results.len());
    for result in results {
        processed.push(result?);
    }

    let entries: Vec<(&PointCloud, &[RoughnessField])> = processed
        .iter()
        .map(|(cloud, fields)| (cloud, fields.as_slice()))
        .collect();
    let inputs = manifest
        .clouds
        .iter()
        .map(|entry| format!("{}={}", entry.name, entry.path.display()))
        .collect();
    let report = compare_clouds(&entries, Provenance::new(inputs, ctx.timestamp()))?;

    let text = render_report(&report, args.format.as_report_format());
    print!("{text}");
    if !text.ends_with('\n') {
        println!();
    }

    if let Some(dir) = &output_dir {
        let path = dir.join(format!("report.{}", args.format.extension()));
        std::fs::write(&path, &text)
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("report written to {}", path.display());
    }
    Ok(())
}

/// The per-cloud chain. Every error names the cloud and the stage that
/// failed.
fn process_cloud(
    entry: &CloudEntry,
    base: &Path,
    crop: Option<&PolygonRegion>,
    manifest: &PipelineManifest,
    config: &RoughnessConfig,
    ctx: &RunContext,
    output_dir: Option<&Path>,
) -> Result<(PointCloud, Vec<RoughnessField>)> {
    let name = &entry.name;
    let path = resolve(base, &entry.path);
    if !path.is_file() {
        bail!("cloud '{name}': file not found ({})", entry.path.display());
    }

    let cloud = match entry.convert {
        Some(spec) => (|| -> Result<PointCloud> {
            let set = parse_splat_ply(&path)?;
            Ok(splats_to_cloud(&set, spec.into(), ctx.seed)?)
        })()
        .with_context(|| format!("cloud '{name}': convert"))?,
        None => load_cloud(&path).with_context(|| format!("cloud '{name}': load"))?,
    };
    let cloud = cloud.with_name(name);

    let (cloud, _outcome) = super::prep::apply_prep(
        cloud,
        crop,
        manifest.prep.align,
        manifest.prep.normalize.map(Into::into),
    )
    .with_context(|| format!("cloud '{name}': prep"))?;

    let fields = (|| -> Result<Vec<RoughnessField>> {
        check_radii_fit_cloud(&cloud, &config.radii)?;
        Ok(compute_roughness_fields(&cloud, config)?)
    })()
    .with_context(|| format!("cloud '{name}': roughness"))?;

    let mut with_fields = cloud;
    for field in &fields {
        with_fields = with_fields
            .with_roughness_field(field)
            .with_context(|| format!("cloud '{name}': roughness"))?;
    }
    if let Some(dir) = output_dir {
        let artifact = dir.join(format!("{name}.ply"));
        save_cloud(&with_fields, &artifact, false)
            .with_context(|| format!("cloud '{name}': writing artifact"))?;
    }
    Ok((with_fields, fields))
}
