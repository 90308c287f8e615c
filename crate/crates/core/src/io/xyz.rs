//! Plain-text XYZ/CSV point clouds: one point per row, whitespace- or
//! comma-separated, `#` comment lines, extra columns as scalar fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Load a text cloud. Columns 1-3 are x, y, z; any further columns become
/// scalar fields named `col4`, `col5`, ... with NaN marking undefined
/// values. Rows must all have the same column count. Line numbers in
/// errors are physical 1-based file lines, comments included.
pub fn load_xyz(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut extras: Vec<Vec<Option<f64>>> = Vec::new();
    let mut columns: Option<usize> = None;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = if trimmed.contains(',') {
            trimmed.split(',').map(str::trim).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        let mut values = Vec::with_capacity(tokens.len());
        for token in &tokens {
            match token.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) => return Err(Error::NonNumericRow(lineno)),
            }
        }
        if values.len() < 3 {
            return Err(Error::TooFewColumns(lineno));
        }
        match columns {
            None => {
                columns = Some(values.len());
                extras = vec![Vec::new(); values.len() - 3];
            }
            Some(n) if n != values.len() => {
                return Err(Error::InvalidArgument(format!(
                    "row at line {lineno} has {} columns, expected {n}",
                    values.len()
                )));
            }
            Some(_) => {}
        }
        points.push([values[0], values[1], values[2]]);
        for (k, &v) in values[3..].iter().enumerate() {
            extras[k].push(if v.is_nan() { None } else { Some(v) });
        }
    }

    let mut cloud = PointCloud::new(
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "cloud".to_string()),
        points,
    )?;
    for (k, values) in extras.into_iter().enumerate() {
        cloud = cloud.with_scalar_field(format!("col{}", k + 4), values)?;
    }
    Ok(cloud)
}

/// Write a text cloud: positions then scalar fields (sorted by name),
/// space-separated, full f64 precision, NaN for undefined values. A `#`
/// header names the columns; XYZ carries no colors or normals, and field
/// names survive only positionally (`col4`, `col5`, ... on reload).
pub fn save_xyz(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let fields: Vec<(&String, &crate::cloud::ScalarValues)> = cloud.scalar_fields().iter().collect();

    let mut text = String::new();
    for comment in cloud.comments() {
        let one_line = comment.replace(['\n', '\r'], " ");
        let _ = writeln!(text, "# {one_line}");
    }
    let mut header = String::from("# x y z");
    for (name, _) in &fields {
        header.push(' ');
        header.push_str(name);
    }
    let _ = writeln!(text, "{header}");
    for i in 0..cloud.len() {
        let p = cloud.points()[i];
        let _ = write!(text, "{} {} {}", p[0], p[1], p[2]);
        for (_, values) in &fields {
            let _ = write!(text, " {}", values[i].unwrap_or(f64::NAN));
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
