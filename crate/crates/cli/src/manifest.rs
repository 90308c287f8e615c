//! The manifest format consumed by `rugos compare`: a JSON description of
//! the clouds to analyze and the shared settings applied to each of them.
//!
//! Relative paths inside a manifest (cloud inputs, crop region, output
//! directory) resolve against the directory containing the manifest file,
//! so a manifest plus its data directory is relocatable as a unit.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rugos_core::io::SplatConversionMode;
use rugos_core::{MetricVariant, NormalizeStrategy, RoughnessConfig};
use serde::Deserialize;

/// A full comparison run: which clouds, how to prepare them, which
/// roughness settings, and where to put per-cloud artifacts.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineManifest {
    /// The clouds to analyze; names must be unique.
    pub clouds: Vec<CloudEntry>,
    /// Shared roughness settings (defaults: radii 0.2/0.4/0.6, mean
    /// absolute deviation, at least 4 neighbors).
    #[serde(default)]
    pub roughness: RoughnessSettings,
    /// Shared preprocessing applied to every cloud before roughness.
    #[serde(default)]
    pub prep: PrepSettings,
    /// Where per-cloud artifacts and the report file are written. When
    /// absent, the report goes to standard output only.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// One input cloud.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudEntry {
    /// Name used in the report and for artifact file names.
    pub name: String,
    /// Input file, resolved relative to the manifest directory.
    pub path: PathBuf,
    /// For Gaussian-splat inputs: how to turn splats into points.
    /// Absent means the input is loaded as an ordinary cloud.
    #[serde(default)]
    pub convert: Option<ConversionSpec>,
}

/// Splat-to-cloud conversion, mirroring the `convert` subcommand flags.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConversionSpec {
    /// Keep every splat center.
    CentersAll,
    /// Keep centers whose activated opacity is at least `tau`.
    OpacityThreshold { tau: f64 },
    /// Sample points per splat in proportion to its footprint.
    DensitySampled { rate: f64 },
}

impl From<ConversionSpec> for SplatConversionMode {
    fn from(spec: ConversionSpec) -> Self {
        match spec {
            ConversionSpec::CentersAll => SplatConversionMode::CentersAll,
            ConversionSpec::OpacityThreshold { tau } => {
                SplatConversionMode::OpacityThreshold(tau)
            }
            ConversionSpec::DensitySampled { rate } => {
                SplatConversionMode::DensitySampled(rate)
            }
        }
    }
}

/// The roughness metric named in manifests and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MetricArg {
    /// Mean absolute deviation of neighbors from their best-fit plane.
    Mad,
    /// Absolute distance of the point itself to its neighbors' plane.
    P2p,
}

impl From<MetricArg> for MetricVariant {
    fn from(arg: MetricArg) -> Self {
        match arg {
            MetricArg::Mad => MetricVariant::Mad,
            MetricArg::P2p => MetricVariant::PointToPlane,
        }
    }
}

/// Roughness settings shared by every cloud in a manifest.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoughnessSettings {
    pub radii: Vec<f64>,
    pub variant: MetricArg,
    pub min_neighbors: usize,
}

impl Default for RoughnessSettings {
    fn default() -> Self {
        let config = RoughnessConfig::default();
        Self {
            radii: config.radii,
            variant: MetricArg::Mad,
            min_neighbors: config.min_neighbors,
        }
    }
}

impl RoughnessSettings {
    pub fn to_config(&self) -> RoughnessConfig {
        RoughnessConfig {
            radii: self.radii.clone(),
            variant: self.variant.into(),
            min_neighbors: self.min_neighbors,
            ..RoughnessConfig::default()
        }
    }
}

/// Preprocessing toggles shared by every cloud in a manifest.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepSettings {
    /// Rotate the dominant plane flat and center the cloud.
    pub align: bool,
    /// Rescale after alignment: `"bbox"` or `{"factor": <positive>}`.
    pub normalize: Option<NormalizeSpec>,
    /// Polygon region file (one `x y` vertex per line); points outside
    /// the XY polygon are dropped before alignment.
    pub crop: Option<PathBuf>,
}

/// Normalization named in manifests.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeSpec {
    /// Scale so the bounding-box diagonal becomes 1.
    Bbox,
    /// Multiply all coordinates by this factor.
    Factor(f64),
}

impl From<NormalizeSpec> for NormalizeStrategy {
    fn from(spec: NormalizeSpec) -> Self {
        match spec {
            NormalizeSpec::Bbox => NormalizeStrategy::BboxDiagonalUnit,
            NormalizeSpec::Factor(f) => NormalizeStrategy::ExplicitFactor(f),
        }
    }
}

impl PipelineManifest {
    /// Parse and validate a manifest file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let manifest: PipelineManifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        if self.clouds.is_empty() {
            bail!("manifest lists no clouds");
        }
        let mut seen = std::collections::BTreeSet::new();
        for entry in &self.clouds {
            if entry.name.is_empty() {
                bail!("cloud names must be non-empty");
            }
            // Names become artifact file names and report keys.
            if !entry
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
            {
                bail!(
                    "cloud name {:?} may only contain letters, digits, '.', '_', '-'",
                    entry.name
                );
            }
            if !seen.insert(entry.name.as_str()) {
                bail!("duplicate cloud name {:?}", entry.name);
            }
        }
        Ok(())
    }
}

/// Resolve a manifest-relative path against the manifest's directory.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PipelineManifest> {
        let manifest: PipelineManifest = serde_json::from_str(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    #[test]
    fn minimal_manifest_gets_default_settings() {
        let manifest = parse(r#"{"clouds": [{"name": "a", "path": "a.ply"}]}"#).unwrap();
        assert_eq!(manifest.roughness.radii, vec![0.2, 0.4, 0.6]);
        assert_eq!(manifest.roughness.variant, MetricArg::Mad);
        assert_eq!(manifest.roughness.min_neighbors, 4);
        assert!(!manifest.prep.align);
        assert!(manifest.prep.normalize.is_none());
        assert!(manifest.output_dir.is_none());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let err = parse(
            r#"{"clouds": [{"name": "a", "path": "1.ply"}, {"name": "a", "path": "2.ply"}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate cloud name"));
    }

    #[test]
    fn hostile_names_are_rejected() {
        let err =
            parse(r#"{"clouds": [{"name": "../up", "path": "a.ply"}]}"#).unwrap_err();
        assert!(err.to_string().contains("may only contain"));
    }

    #[test]
    fn conversion_and_normalization_spellings_parse() {
        let manifest = parse(
            r#"{
                "clouds": [
                    {"name": "gs", "path": "gs.ply", "convert": {"opacity_threshold": {"tau": 0.5}}},
                    {"name": "all", "path": "gs2.ply", "convert": "centers_all"}
                ],
                "prep": {"align": true, "normalize": "bbox"},
                "roughness": {"radii": [0.1], "variant": "p2p", "min_neighbors": 6}
            }"#,
        )
        .unwrap();
        assert!(matches!(
            manifest.clouds[0].convert,
            Some(ConversionSpec::OpacityThreshold { tau }) if tau == 0.5
        ));
        assert!(matches!(
            manifest.clouds[1].convert,
            Some(ConversionSpec::CentersAll)
        ));
        assert!(matches!(
            manifest.prep.normalize,
            Some(NormalizeSpec::Bbox)
        ));
        let config = manifest.roughness.to_config();
        assert_eq!(config.variant, MetricVariant::PointToPlane);
        assert_eq!(config.min_neighbors, 6);
    }

    #[test]
    fn factor_normalization_parses() {
        let manifest = parse(
            r#"{"clouds": [{"name": "a", "path": "a.ply"}], "prep": {"normalize": {"factor": 2.5}}}"#,
        )
        .unwrap();
        assert!(matches!(
            manifest.prep.normalize,
            Some(NormalizeSpec::Factor(f)) if f == 2.5
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse(r#"{"clouds": [], "extra": 1}"#).is_err());
        assert!(parse(r#"{"clouds": [{"name": "a", "path": "a.ply", "oops": 1}]}"#).is_err());
    }

    #[test]
    fn relative_paths_resolve_against_the_manifest_directory() {
        let base = Path::new("/data/run");
        assert_eq!(
            resolve(base, Path::new("clouds/a.ply")),
            PathBuf::from("/data/run/clouds/a.ply")
        );
        assert_eq!(
            resolve(base, Path::new("/abs/a.ply")),
            PathBuf::from("/abs/a.ply")
        );
    }
}
