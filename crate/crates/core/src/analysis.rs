//! Aggregation of roughness fields: per-field statistics with histograms,
//! multi-cloud comparison reports, and report rendering (JSON / CSV /
//! Markdown).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cloud::{MetricVariant, PointCloud, RoughnessField};
use crate::error::{Error, Result};
use crate::math::CompensatedSum;

/// Number of uniform histogram bins in [`FieldStats`].
pub const HISTOGRAM_BINS: usize = 64;

/// Uniform-bin histogram over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

/// Summary statistics of one roughness field, over defined values only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    /// Population standard deviation: the field covers the whole cloud, it
    /// is not a sample.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    #[serde(rename = "defined")]
    pub defined_count: usize,
    #[serde(rename = "undefined")]
    pub undefined_count: usize,
    pub histogram: Histogram,
}

/// Where a report came from: input files, producing tool, wall-clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub inputs: Vec<String>,
    pub tool_version: String,
    pub timestamp: String,
}

impl Provenance {
    /// Stamps the library version as the tool version.
    pub fn new(inputs: Vec<String>, timestamp: impl Into<String>) -> Self {
        Self {
            inputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp.into(),
        }
    }
}

/// Multi-cloud, multi-radius comparison.
///
/// `clouds` maps cloud name -> radius key (`"r0.2"`) -> stats; `rankings`
/// maps radius key -> cloud names sorted by descending mean (ties broken
/// by name). Map keys are sorted, so serialization is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metric_variant: MetricVariant,
    pub radii: Vec<f64>,
    pub clouds: BTreeMap<String, BTreeMap<String, FieldStats>>,
    pub rankings: BTreeMap<String, Vec<String>>,
    pub provenance: Provenance,
}

/// Output encodings for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Canonical machine format; round-trips through [`parse_report`].
    Json,
    /// One row per (cloud, radius).
    Csv,
    /// Human-readable summary table with one mean-range column.
    Markdown,
}

/// The key under which a radius appears in report maps: `0.2 -> "r0.2"`.
pub fn radius_key(radius: f64) -> String {
    format!("r{radius}")
}

/// Compute statistics of a field's defined values.
pub fn field_stats(field: &RoughnessField) -> Result<FieldStats> {
    let defined_count = field.defined_count();
    if defined_count == 0 {
        return Err(Error::NoDefinedValues);
    }
    let inv_n = 1.0 / defined_count as f64;

    let mut sum = CompensatedSum::new();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in field.values().iter().flatten() {
        sum.add(v);
        min = min.min(v);
        max = max.max(v);
    }
    let mean = sum.total() * inv_n;

    let mut dev2 = CompensatedSum::new();
    for &v in field.values().iter().flatten() {
        dev2.add((v - mean) * (v - mean));
    }
    let std = (dev2.total() * inv_n).max(0.0).sqrt();

    let mut counts = vec![0u64; HISTOGRAM_BINS];
    let span = max - min;
    for &v in field.values().iter().flatten() {
        let bin = if span > 0.0 {
            (((v - min) / span) * HISTOGRAM_BINS as f64) as usize
        } else {
            0
        };
        counts[bin.min(HISTOGRAM_BINS - 1)] += 1;
    }

    Ok(FieldStats {
        mean,
        std,
        min,
        max,
        defined_count,
        undefined_count: field.undefined_count(),
        histogram: Histogram {
            lo: min,
            hi: max,
            counts,
        },
    })
}

/// Build a comparison report over clouds that carry roughness fields.
///
/// Every cloud must provide fields for the same radii (bit-equal values)
/// and the same metric variant. Rankings sort cloud names by descending
/// mean per radius, ties broken lexicographically.
pub fn compare_clouds(
    entries: &[(&PointCloud, &[RoughnessField])],
    provenance: Provenance,
) -> Result<ComparisonReport> {
    if entries.is_empty() {
        return Err(Error::InvalidArgument("no clouds to compare".into()));
    }

    // Reference radii/variant from the first entry, fields sorted by radius.
    let sorted_fields = |fields: &[RoughnessField]| -> Vec<usize> {
        let mut order: Vec<usize> = (0..fields.len()).collect();
        order.sort_by(|&a, &b| fields[a].radius().total_cmp(&fields[b].radius()));
        order
    };
    let first_order = sorted_fields(entries[0].1);
    let radii: Vec<f64> = first_order
        .iter()
        .map(|&k| entries[0].1[k].radius())
        .collect();
    if radii.is_empty() {
        return Err(Error::MismatchedRadii(format!(
            "cloud '{}' carries no roughness fields",
            entries[0].0.name()
        )));
    }
    if radii.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::MismatchedRadii(format!(
            "cloud '{}' has duplicate radii",
            entries[0].0.name()
        )));
    }
    let variant = entries[0].1[first_order[0]].variant();

    let mut clouds: BTreeMap<String, BTreeMap<String, FieldStats>> = BTreeMap::new();
    for (cloud, fields) in entries {
        let order = sorted_fields(fields);
        let these: Vec<f64> = order.iter().map(|&k| fields[k].radius()).collect();
        if these != radii {
            return Err(Error::MismatchedRadii(format!(
                "cloud '{}' has radii {:?}, expected {:?}",
                cloud.name(),
                these,
                radii
            )));
        }
        let mut per_radius = BTreeMap::new();
        for &k in &order {
            let field = &fields[k];
            if field.variant() != variant {
                return Err(Error::MismatchedVariant);
            }
            if field.values().len() != cloud.len() {
                return Err(Error::LengthMismatch {
                    what: "roughness field values",
                    got: field.values().len(),
                    expected: cloud.len(),
                });
            }
            per_radius.insert(radius_key(field.radius()), field_stats(field)?);
        }
        if clouds.insert(cloud.name().to_string(), per_radius).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate cloud name '{}'",
                cloud.name()
            )));
        }
    }

    let mut rankings = BTreeMap::new();
    for &r in &radii {
        let key = radius_key(r);
        let mut names: Vec<&str> = clouds.keys().map(String::as_str).collect();
        names.sort_by(|a, b| {
            let ma = clouds[*a][&key].mean;
            let mb = clouds[*b][&key].mean;
            mb.total_cmp(&ma).then_with(|| a.cmp(b))
        });
        rankings.insert(key, names.into_iter().map(String::from).collect());
    }

    Ok(ComparisonReport {
        metric_variant: variant,
        radii,
        clouds,
        rankings,
        provenance,
    })
}

/// Render a report in the requested format.
pub fn render_report(report: &ComparisonReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(report).expect("report serialization cannot fail");
            text.push('\n');
            text
        }
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => render_markdown(report),
    }
}

/// Parse a report previously rendered as JSON.
pub fn parse_report(text: &str) -> Result<ComparisonReport> {
    serde_json::from_str(text)
        .map_err(|e| Error::InvalidArgument(format!("invalid report JSON: {e}")))
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("cloud,radius,mean,std,min,max,defined,undefined\n");
    for (name, per_radius) in &report.clouds {
        for &r in &report.radii {
            let s = &per_radius[&radius_key(r)];
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_escape(name),
                r,
                s.mean,
                s.std,
                s.min,
                s.max,
                s.defined_count,
                s.undefined_count
            )
            .expect("writing to String cannot fail");
        }
    }
    out
}

fn render_markdown(report: &ComparisonReport) -> String {
    let lo = report.radii.first().expect("validated non-empty");
    let hi = report.radii.last().expect("validated non-empty");
    let mut out = format!("Metric: {}\n\n", report.metric_variant.as_str());
    if report.radii.len() == 1 {
        let _ = writeln!(out, "| Cloud | Mean ({lo} model units) |");
    } else {
        let _ = writeln!(out, "| Cloud | Mean ({lo}\u{2013}{hi} model units) |");
    }
    out.push_str("| --- | --- |\n");
    // Rows follow the ranking at the smallest radius: the table reads
    // roughest-first like the prose discussion it summarizes.
    let order = &report.rankings[&radius_key(*lo)];
    for name in order {
        let per_radius = &report.clouds[name];
        let mean_lo = per_radius[&radius_key(*lo)].mean;
        if report.radii.len() == 1 {
            let _ = writeln!(out, "| {name} | {mean_lo:.4} |");
        } else {
            let mean_hi = per_radius[&radius_key(*hi)].mean;
            let _ = writeln!(out, "| {name} | {mean_lo:.4}\u{2013}{mean_hi:.4} |");
        }
    }
    out
}
