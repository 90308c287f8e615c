//! PLY reading and writing: ASCII and binary-little-endian encodings, a
//! strict typed header parser, and the property-to-attribute mapping for
//! point clouds (positions, colors, normals, scalar fields).

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Body encodings supported by this crate. Big-endian files are rejected
/// rather than byte-swapped: no producer in scope emits them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

/// The eight scalar property types of PLY 1.0. Classic aliases (`char`,
/// `uchar`, `short`, `ushort`, `int`, `uint`, `float`, `double`) and the
/// sized spellings (`int8`, ..., `float64`) are both accepted on read;
/// classic names are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(token: &str) -> Option<Self> {
        Some(match token {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    pub fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarType::I8 => "char",
            ScalarType::U8 => "uchar",
            ScalarType::I16 => "short",
            ScalarType::U16 => "ushort",
            ScalarType::I32 => "int",
            ScalarType::U32 => "uint",
            ScalarType::F32 => "float",
            ScalarType::F64 => "double",
        }
    }

    fn is_float(self) -> bool {
        matches!(self, ScalarType::F32 | ScalarType::F64)
    }
}

/// A property is either one scalar or a counted list (used by mesh faces;
/// recognized so such elements can be skipped, rejected on vertices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlyProperty {
    pub name: String,
    pub kind: PropertyKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlyElement {
    pub name: String,
    pub count: usize,
    pub properties: Vec<PlyProperty>,
}

impl PlyElement {
    /// Bytes per record when every property is scalar; `None` with lists.
    fn fixed_record_size(&self) -> Option<usize> {
        self.properties
            .iter()
            .map(|p| match p.kind {
                PropertyKind::Scalar(ty) => Some(ty.size()),
                PropertyKind::List { .. } => None,
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlyHeader {
    pub format: PlyFormat,
    pub version: String,
    pub elements: Vec<PlyElement>,
    pub comments: Vec<String>,
}

impl PlyHeader {
    fn vertex_element(&self) -> Result<usize> {
        self.elements
            .iter()
            .position(|e| e.name == "vertex")
            .ok_or(Error::MissingVertexElement)
    }
}

fn malformed(detail: impl Into<String>) -> Error {
    Error::MalformedHeader(detail.into())
}

/// Parse a PLY header from the start of `bytes`. Returns the header and
/// the byte offset where the body begins.
pub fn parse_ply_header(bytes: &[u8]) -> Result<(PlyHeader, usize)> {
    let (header, offset, _lines) = parse_header_inner(bytes)?;
    Ok((header, offset))
}

fn parse_header_inner(bytes: &[u8]) -> Result<(PlyHeader, usize, usize)> {
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let mut next_line = || -> Option<Result<&str>> {
        if pos >= bytes.len() {
            return None;
        }
        let start = pos;
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| start + i);
        let (raw, new_pos) = match end {
            Some(e) => (&bytes[start..e], e + 1),
            None => (&bytes[start..], bytes.len()),
        };
        pos = new_pos;
        line_no += 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        Some(
            std::str::from_utf8(raw)
                .map_err(|_| malformed(format!("line {line_no} is not valid UTF-8"))),
        )
    };

    match next_line().transpose()? {
        Some(line) if line.trim() == "ply" => {}
        _ => return Err(malformed("missing 'ply' magic line")),
    }

    let mut format: Option<PlyFormat> = None;
    let mut version = String::new();
    let mut comments = Vec::new();
    let mut elements: Vec<PlyElement> = Vec::new();

    loop {
        let line = match next_line() {
            Some(line) => line?,
            None => return Err(malformed("file ends before end_header")),
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let keyword = tokens.next().expect("non-empty line has a first token");
        match keyword {
            "end_header" => break,
            "comment" | "obj_info" => {
                let payload = trimmed
                    .strip_prefix(keyword)
                    .expect("line starts with keyword")
                    .trim_start();
                comments.push(payload.to_string());
            }
            "format" => {
                if format.is_some() {
                    return Err(malformed("duplicate format line"));
                }
                let enc = tokens.next().ok_or_else(|| malformed("format line missing encoding"))?;
                let ver = tokens.next().ok_or_else(|| malformed("format line missing version"))?;
                let parsed = match enc {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(Error::UnsupportedFormat(
                            "big-endian PLY is not supported".into(),
                        ))
                    }
                    other => return Err(malformed(format!("unknown encoding '{other}'"))),
                };
                if ver != "1.0" {
                    return Err(Error::UnsupportedFormat(format!(
                        "PLY version {ver} (only 1.0 is supported)"
                    )));
                }
                format = Some(parsed);
                version = ver.to_string();
            }
            "element" => {
                let name = tokens.next().ok_or_else(|| malformed("element line missing name"))?;
                let count: usize = tokens
                    .next()
                    .ok_or_else(|| malformed("element line missing count"))?
                    .parse()
                    .map_err(|_| malformed(format!("invalid count for element '{name}'")))?;
                if elements.iter().any(|e| e.name == name) {
                    return Err(malformed(format!("duplicate element '{name}'")));
                }
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| malformed("property line before any element"))?;
                let first = tokens.next().ok_or_else(|| malformed("property line missing type"))?;
                let (kind, name) = if first == "list" {
                    let count_tok =
                        tokens.next().ok_or_else(|| malformed("list property missing count type"))?;
                    let item_tok =
                        tokens.next().ok_or_else(|| malformed("list property missing item type"))?;
                    let count = ScalarType::parse(count_tok)
                        .ok_or_else(|| malformed(format!("unknown scalar type '{count_tok}'")))?;
                    let item = ScalarType::parse(item_tok)
                        .ok_or_else(|| malformed(format!("unknown scalar type '{item_tok}'")))?;
                    let name =
                        tokens.next().ok_or_else(|| malformed("list property missing name"))?;
                    (PropertyKind::List { count, item }, name)
                } else {
                    let ty = ScalarType::parse(first)
                        .ok_or_else(|| malformed(format!("unknown scalar type '{first}'")))?;
                    let name = tokens.next().ok_or_else(|| malformed("property line missing name"))?;
                    (PropertyKind::Scalar(ty), name)
                };
                if element.properties.iter().any(|p| p.name == name) {
                    return Err(malformed(format!(
                        "duplicate property '{}' in element '{}'",
                        name, element.name
                    )));
                }
                element.properties.push(PlyProperty {
                    name: name.to_string(),
                    kind,
                });
            }
            other => return Err(malformed(format!("unexpected header keyword '{other}'"))),
        }
    }

    let format = format.ok_or_else(|| malformed("missing format line"))?;
    Ok((
        PlyHeader {
            format,
            version,
            elements,
            comments,
        },
        pos,
        line_no,
    ))
}

/// The vertex element of one file, decoded to column-major f64 values.
pub(crate) struct RawVertexData {
    pub header: PlyHeader,
    pub vertex_index: usize,
    /// One column per vertex property, each `count` values long.
    pub columns: Vec<Vec<f64>>,
}

pub(crate) fn read_vertex_data(path: &Path) -> Result<RawVertexData> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, body_offset, header_lines) = parse_header_inner(&bytes)?;
    let vertex_index = header.vertex_element()?;
    let vertex = &header.elements[vertex_index];
    for p in &vertex.properties {
        if let PropertyKind::List { .. } = p.kind {
            return Err(Error::UnsupportedFormat(format!(
                "list property '{}' on the vertex element",
                p.name
            )));
        }
    }

    let columns = match header.format {
        PlyFormat::Ascii => {
            decode_ascii(&bytes[body_offset..], &header, vertex_index, header_lines)?
        }
        PlyFormat::BinaryLittleEndian => {
            decode_binary(&bytes[body_offset..], &header, vertex_index)?
        }
    };
    Ok(RawVertexData {
        header,
        vertex_index,
        columns,
    })
}

/// Whitespace tokenizer that tracks 1-based physical file lines.
struct AsciiTokens<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> AsciiTokens<'a> {
    fn new(body: &'a str, first_line: usize) -> Self {
        Self {
            rest: body,
            line: first_line,
        }
    }

    fn next(&mut self) -> Option<(&'a str, usize)> {
        let mut chars = self.rest.char_indices();
        let start = loop {
            match chars.next() {
                Some((i, c)) if c.is_whitespace() => {
                    if c == '\n' {
                        self.line += 1;
                    }
                    let _ = i;
                }
                Some((i, _)) => break i,
                None => {
                    self.rest = "";
                    return None;
                }
            }
        };
        let after = &self.rest[start..];
        let len = after
            .char_indices()
            .find(|(_, c)| c.is_whitespace())
            .map(|(i, _)| i)
            .unwrap_or(after.len());
        let token = &after[..len];
        self.rest = &after[len..];
        Some((token, self.line))
    }
}

fn parse_ascii_value(token: &str, ty: ScalarType, line: usize, prop: &str) -> Result<f64> {
    let bad = || Error::MalformedBody {
        line,
        detail: format!("invalid {} value '{token}' for property '{prop}'", ty.name()),
    };
    match ty {
        ScalarType::F32 => token.parse::<f32>().map(f64::from).map_err(|_| bad()),
        ScalarType::F64 => token.parse::<f64>().map_err(|_| bad()),
        _ => {
            let v = token.parse::<i64>().map_err(|_| bad())?;
            let (lo, hi) = match ty {
                ScalarType::I8 => (i8::MIN as i64, i8::MAX as i64),
                ScalarType::U8 => (0, u8::MAX as i64),
                ScalarType::I16 => (i16::MIN as i64, i16::MAX as i64),
                ScalarType::U16 => (0, u16::MAX as i64),
                ScalarType::I32 => (i32::MIN as i64, i32::MAX as i64),
                ScalarType::U32 => (0, u32::MAX as i64),
                _ => unreachable!("float types handled above"),
            };
            if v < lo || v > hi {
                return Err(Error::MalformedBody {
                    line,
                    detail: format!("value {v} out of range for {} property '{prop}'", ty.name()),
                });
            }
            Ok(v as f64)
        }
    }
}

fn decode_ascii(
    body: &[u8],
    header: &PlyHeader,
    vertex_index: usize,
    header_lines: usize,
) -> Result<Vec<Vec<f64>>> {
    let text = std::str::from_utf8(body).map_err(|_| Error::MalformedBody {
        line: header_lines + 1,
        detail: "ASCII body is not valid UTF-8 text".into(),
    })?;
    let mut tokens = AsciiTokens::new(text, header_lines + 1);

    let mut columns = Vec::new();
    for (elem_idx, element) in header.elements.iter().enumerate() {
        let is_vertex = elem_idx == vertex_index;
        if is_vertex {
            columns = vec![Vec::with_capacity(element.count); element.properties.len()];
        }
        for _record in 0..element.count {
            for (prop_idx, prop) in element.properties.iter().enumerate() {
                match prop.kind {
                    PropertyKind::Scalar(ty) => {
                        let (token, line) = tokens.next().ok_or_else(|| {
                            Error::TruncatedBody(format!(
                                "file ends inside element '{}'",
                                element.name
                            ))
                        })?;
                        if is_vertex {
                            columns[prop_idx].push(parse_ascii_value(token, ty, line, &prop.name)?);
                        } else {
                            // Value skipped, but malformed text still fails.
                            parse_ascii_value(token, ty, line, &prop.name)?;
                        }
                    }
                    PropertyKind::List { count, .. } => {
                        let (token, line) = tokens.next().ok_or_else(|| {
                            Error::TruncatedBody(format!(
                                "file ends inside element '{}'",
                                element.name
                            ))
                        })?;
                        let n = parse_ascii_value(token, count, line, &prop.name)?;
                        if n < 0.0 {
                            return Err(Error::MalformedBody {
                                line,
                                detail: format!("negative list count for '{}'", prop.name),
                            });
                        }
                        for _ in 0..n as usize {
                            tokens.next().ok_or_else(|| {
                                Error::TruncatedBody(format!(
                                    "file ends inside element '{}'",
                                    element.name
                                ))
                            })?;
                        }
                    }
                }
            }
        }
        if is_vertex {
            break;
        }
    }
    Ok(columns)
}

fn read_le_scalar(body: &[u8], offset: &mut usize, ty: ScalarType, element: &str) -> Result<f64> {
    let size = ty.size();
    let end = *offset + size;
    if end > body.len() {
        return Err(Error::TruncatedBody(format!(
            "file ends inside element '{element}'"
        )));
    }
    let s = &body[*offset..end];
    *offset = end;
    Ok(match ty {
        ScalarType::I8 => s[0] as i8 as f64,
        ScalarType::U8 => s[0] as f64,
        ScalarType::I16 => i16::from_le_bytes([s[0], s[1]]) as f64,
        ScalarType::U16 => u16::from_le_bytes([s[0], s[1]]) as f64,
        ScalarType::I32 => i32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64,
        ScalarType::U32 => u32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64,
        ScalarType::F32 => f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64,
        ScalarType::F64 => f64::from_le_bytes([
            s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7],
        ]),
    })
}

fn decode_binary(body: &[u8], header: &PlyHeader, vertex_index: usize) -> Result<Vec<Vec<f64>>> {
    let mut offset = 0usize;
    let mut columns = Vec::new();
    for (elem_idx, element) in header.elements.iter().enumerate() {
        let is_vertex = elem_idx == vertex_index;
        if is_vertex {
            let record = element
                .fixed_record_size()
                .expect("vertex lists rejected earlier");
            let needed = element
                .count
                .checked_mul(record)
                .ok_or_else(|| Error::TruncatedBody("vertex element size overflows".into()))?;
            let got = body.len() - offset;
            if got < needed {
                return Err(Error::TruncatedBody(format!(
                    "element 'vertex' needs {needed} bytes, {got} remain"
                )));
            }
            columns = vec![Vec::with_capacity(element.count); element.properties.len()];
            for _record in 0..element.count {
                for (prop_idx, prop) in element.properties.iter().enumerate() {
                    let PropertyKind::Scalar(ty) = prop.kind else {
                        unreachable!("vertex lists rejected earlier");
                    };
                    columns[prop_idx].push(read_le_scalar(body, &mut offset, ty, "vertex")?);
                }
            }
            break;
        }
        match element.fixed_record_size() {
            Some(record) => {
                let needed = element
                    .count
                    .checked_mul(record)
                    .ok_or_else(|| Error::TruncatedBody(format!(
                        "element '{}' size overflows",
                        element.name
                    )))?;
                let got = body.len() - offset;
                if got < needed {
                    return Err(Error::TruncatedBody(format!(
                        "element '{}' needs {needed} bytes, {got} remain",
                        element.name
                    )));
                }
                offset += needed;
            }
            None => {
                // List-bearing element: walk each record to find its size.
                for _record in 0..element.count {
                    for prop in &element.properties {
                        match prop.kind {
                            PropertyKind::Scalar(ty) => {
                                read_le_scalar(body, &mut offset, ty, &element.name)?;
                            }
                            PropertyKind::List { count, item } => {
                                let n =
                                    read_le_scalar(body, &mut offset, count, &element.name)?;
                                if n < 0.0 {
                                    return Err(Error::MalformedBody {
                                        line: 0,
                                        detail: format!(
                                            "negative list count for '{}'",
                                            prop.name
                                        ),
                                    });
                                }
                                let skip = n as usize * item.size();
                                if offset + skip > body.len() {
                                    return Err(Error::TruncatedBody(format!(
                                        "file ends inside element '{}'",
                                        element.name
                                    )));
                                }
                                offset += skip;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(columns)
}

/// Load a PLY point cloud.
///
/// `x`/`y`/`z` become positions; `red`/`green`/`blue` (uchar) colors;
/// `nx`/`ny`/`nz` (float/double) normals, normalized on load; every other
/// float/double vertex property becomes a scalar field of the same name,
/// with NaN marking undefined values. The cloud is named by the file stem.
pub fn load_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let raw = read_vertex_data(path)?;
    let vertex = &raw.header.elements[raw.vertex_index];
    let count = vertex.count;

    let scalar_ty = |idx: usize| match vertex.properties[idx].kind {
        PropertyKind::Scalar(ty) => ty,
        PropertyKind::List { .. } => unreachable!("vertex lists rejected on read"),
    };
    let find = |name: &str| vertex.properties.iter().position(|p| p.name == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| malformed(format!("vertex element has no '{name}' property")))
    };

    let xi = require("x")?;
    let yi = require("y")?;
    let zi = require("z")?;
    let mut consumed: BTreeSet<usize> = [xi, yi, zi].into();

    let points: Vec<[f64; 3]> = (0..count)
        .map(|r| [raw.columns[xi][r], raw.columns[yi][r], raw.columns[zi][r]])
        .collect();

    let color_idx = match (find("red"), find("green"), find("blue")) {
        (Some(r), Some(g), Some(b))
            if scalar_ty(r) == ScalarType::U8
                && scalar_ty(g) == ScalarType::U8
                && scalar_ty(b) == ScalarType::U8 =>
        {
            consumed.extend([r, g, b]);
            Some([r, g, b])
        }
        _ => None,
    };
    let normal_idx = match (find("nx"), find("ny"), find("nz")) {
        (Some(a), Some(b), Some(c))
            if scalar_ty(a).is_float() && scalar_ty(b).is_float() && scalar_ty(c).is_float() =>
        {
            consumed.extend([a, b, c]);
            Some([a, b, c])
        }
        _ => None,
    };

    let mut cloud = PointCloud::new(
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "cloud".to_string()),
        points,
    )?;
    for comment in &raw.header.comments {
        cloud = cloud.with_comment(comment.clone());
    }

    if let Some([r, g, b]) = color_idx {
        let colors: Vec<[u8; 3]> = (0..count)
            .map(|k| {
                [
                    raw.columns[r][k] as u8,
                    raw.columns[g][k] as u8,
                    raw.columns[b][k] as u8,
                ]
            })
            .collect();
        cloud = cloud.with_colors(colors)?;
    }

    if let Some([a, b, c]) = normal_idx {
        let normals: Vec<[f64; 3]> = (0..count)
            .map(|k| {
                let n = [raw.columns[a][k], raw.columns[b][k], raw.columns[c][k]];
                let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                if norm.is_finite() && norm > 0.0 {
                    [n[0] / norm, n[1] / norm, n[2] / norm]
                } else {
                    [f64::NAN; 3]
                }
            })
            .collect();
        cloud = cloud.with_normals(normals)?;
    }

    for (idx, prop) in vertex.properties.iter().enumerate() {
        if consumed.contains(&idx) || !scalar_ty(idx).is_float() {
            continue;
        }
        let values: Vec<Option<f64>> = raw.columns[idx]
            .iter()
            .map(|&v| if v.is_nan() { None } else { Some(v) })
            .collect();
        cloud = cloud.with_scalar_field(prop.name.clone(), values)?;
    }

    Ok(cloud)
}

/// Replace every character outside `[A-Za-z0-9_]` and deduplicate against
/// `used`, so each written property name is unique and viewer-safe.
fn sanitize_property_name(name: &str, used: &mut BTreeSet<String>) -> String {
    let mut base: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if base.is_empty() {
        base = "field".to_string();
    }
    let mut candidate = base.clone();
    let mut suffix = 2;
    while !used.insert(candidate.clone()) {
        candidate = format!("{base}_{suffix}");
        suffix += 1;
    }
    candidate
}

/// Write a cloud as PLY.
///
/// Positions are written as `double` (binary round-trips are bit-exact),
/// colors as `uchar`, normals and scalar fields as `float` with NaN for
/// undefined values. ASCII output prints shortest-round-trip decimals, so
/// ASCII round-trips are exact as well.
pub fn save_ply(cloud: &PointCloud, path: impl AsRef<Path>, format: PlyFormat) -> Result<()> {
    let path = path.as_ref();
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }

    let mut used = BTreeSet::new();
    for reserved in ["x", "y", "z", "red", "green", "blue", "nx", "ny", "nz"] {
        used.insert(reserved.to_string());
    }
    let fields: Vec<(String, &crate::cloud::ScalarValues)> = cloud
        .scalar_fields()
        .iter()
        .map(|(name, values)| (sanitize_property_name(name, &mut used), values))
        .collect();

    let mut header = String::from("ply\n");
    header.push_str(match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    for comment in cloud.comments() {
        let one_line = comment.replace(['\n', '\r'], " ");
        header.push_str(&format!("comment {one_line}\n"));
    }
    header.push_str(&format!("element vertex {}\n", cloud.len()));
    header.push_str("property double x\nproperty double y\nproperty double z\n");
    if cloud.colors().is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    if cloud.normals().is_some() {
        header.push_str("property float nx\nproperty float ny\nproperty float nz\n");
    }
    for (name, _) in &fields {
        header.push_str(&format!("property float {name}\n"));
    }
    header.push_str("end_header\n");

    let mut out: Vec<u8> = header.into_bytes();
    match format {
        PlyFormat::Ascii => {
            let mut text = String::new();
            for i in 0..cloud.len() {
                let p = cloud.points()[i];
                text.push_str(&format!("{} {} {}", p[0], p[1], p[2]));
                if let Some(colors) = cloud.colors() {
                    let c = colors[i];
                    text.push_str(&format!(" {} {} {}", c[0], c[1], c[2]));
                }
                if let Some(normals) = cloud.normals() {
                    let n = normals[i];
                    text.push_str(&format!(
                        " {} {} {}",
                        n[0] as f32, n[1] as f32, n[2] as f32
                    ));
                }
                for (_, values) in &fields {
                    let v = values[i].map(|v| v as f32).unwrap_or(f32::NAN);
                    text.push_str(&format!(" {v}"));
                }
                text.push('\n');
            }
            out.extend_from_slice(text.as_bytes());
        }
        PlyFormat::BinaryLittleEndian => {
            for i in 0..cloud.len() {
                let p = cloud.points()[i];
                for c in p {
                    out.extend_from_slice(&c.to_le_bytes());
                }
                if let Some(colors) = cloud.colors() {
                    out.extend_from_slice(&colors[i]);
                }
                if let Some(normals) = cloud.normals() {
                    for c in normals[i] {
                        out.extend_from_slice(&(c as f32).to_le_bytes());
                    }
                }
                for (_, values) in &fields {
                    let v = values[i].map(|v| v as f32).unwrap_or(f32::NAN);
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }

    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::RoughnessField;
    use crate::cloud::MetricVariant;

    fn tempdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, content).unwrap();
        path
    }

    const THREE_POINT_ASCII: &str = "ply\n\
        format ascii 1.0\n\
        comment made by hand\n\
        element vertex 3\n\
        property float x\n\
        property float y\n\
        property float z\n\
        end_header\n\
        0 0 0\n\
        1 0 0\n\
        0 1.5 -2\n";

    #[test]
    fn header_parses_formats_elements_and_comments() {
        let (header, offset) = parse_ply_header(THREE_POINT_ASCII.as_bytes()).unwrap();
        assert_eq!(header.format, PlyFormat::Ascii);
        assert_eq!(header.version, "1.0");
        assert_eq!(header.comments, vec!["made by hand"]);
        assert_eq!(header.elements.len(), 1);
        assert_eq!(header.elements[0].name, "vertex");
        assert_eq!(header.elements[0].count, 3);
        assert_eq!(header.elements[0].properties.len(), 3);
        assert_eq!(&THREE_POINT_ASCII[offset..offset + 5], "0 0 0");
    }

    #[test]
    fn ascii_cloud_loads_values_exactly() {
        let dir = tempdir();
        let path = write_file(&dir, "tri.ply", THREE_POINT_ASCII);
        let cloud = load_ply(&path).unwrap();
        assert_eq!(cloud.name(), "tri");
        assert_eq!(
            cloud.points(),
            &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.5, -2.0]]
        );
        assert_eq!(cloud.comments(), &["made by hand".to_string()]);
    }

    type ErrorCheck = fn(&Error) -> bool;

    #[test]
    fn header_errors_are_typed() {
        let cases: Vec<(&str, ErrorCheck)> = vec![
            ("not a ply\n", |e| matches!(e, Error::MalformedHeader(_))),
            ("ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n", |e| {
                matches!(e, Error::UnsupportedFormat(_))
            }),
            ("ply\nformat ascii 2.0\nend_header\n", |e| {
                matches!(e, Error::UnsupportedFormat(_))
            }),
            ("ply\nformat ascii 1.0\nproperty float x\nend_header\n", |e| {
                matches!(e, Error::MalformedHeader(_))
            }),
            ("ply\nformat ascii 1.0\nelement vertex nope\nend_header\n", |e| {
                matches!(e, Error::MalformedHeader(_))
            }),
            ("ply\nformat ascii 1.0\nelement vertex 0\nproperty quadruple x\nend_header\n", |e| {
                matches!(e, Error::MalformedHeader(_))
            }),
            ("ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float x\nend_header\n", |e| {
                matches!(e, Error::MalformedHeader(_))
            }),
            ("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n", |e| {
                matches!(e, Error::MalformedHeader(_))
            }),
            ("ply\nformat ascii 1.0\nwhatever else\nend_header\n", |e| {
                matches!(e, Error::MalformedHeader(_))
            }),
            ("ply\nend_header\n", |e| matches!(e, Error::MalformedHeader(_))),
        ];
        for (text, check) in cases {
            let err = parse_ply_header(text.as_bytes()).unwrap_err();
            assert!(check(&err), "wrong error for {text:?}: {err:?}");
        }
    }

    #[test]
    fn missing_vertex_element_is_reported() {
        let dir = tempdir();
        let path = write_file(
            &dir,
            "novert.ply",
            "ply\nformat ascii 1.0\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n",
        );
        assert!(matches!(load_ply(&path), Err(Error::MissingVertexElement)));
    }

    #[test]
    fn list_property_on_vertex_is_unsupported() {
        let dir = tempdir();
        let path = write_file(
            &dir,
            "badvert.ply",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty list uchar float offsets\nend_header\n0 0 0 0\n",
        );
        assert!(matches!(load_ply(&path), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn vertex_without_positions_is_malformed() {
        let dir = tempdir();
        let path = write_file(
            &dir,
            "noz.ply",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n0 0\n",
        );
        assert!(matches!(load_ply(&path), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn truncated_ascii_body_is_reported() {
        let dir = tempdir();
        let truncated = THREE_POINT_ASCII.trim_end_matches("0 1.5 -2\n");
        let path = write_file(&dir, "short.ply", truncated);
        assert!(matches!(load_ply(&path), Err(Error::TruncatedBody(_))));
    }

    #[test]
    fn non_numeric_ascii_value_reports_its_line() {
        let dir = tempdir();
        let bad = THREE_POINT_ASCII.replace("1 0 0", "1 oops 0");
        let path = write_file(&dir, "bad.ply", &bad);
        match load_ply(&path) {
            Err(Error::MalformedBody { line, detail }) => {
                // Line 10: after 8 header lines and the first body row.
                assert_eq!(line, 10, "{detail}");
                assert!(detail.contains("oops"));
            }
            other => panic!("expected MalformedBody, got {other:?}"),
        }
    }

    #[test]
    fn truncated_binary_body_reports_byte_counts() {
        let dir = tempdir();
        let path = dir.path().join("short.bin.ply");
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nend_header\n".to_vec();
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        // Only one of 6 doubles present.
        std::fs::write(&path, bytes).unwrap();
        match load_ply(&path) {
            Err(Error::TruncatedBody(msg)) => {
                assert!(msg.contains("48"), "message: {msg}");
                assert!(msg.contains('8'), "message: {msg}");
            }
            other => panic!("expected TruncatedBody, got {other:?}"),
        }
    }

    fn sample_cloud() -> PointCloud {
        let field = RoughnessField::new(
            0.2,
            MetricVariant::Mad,
            vec![Some(0.1), None, Some(0.25)],
        )
        .unwrap();
        PointCloud::new(
            "sample",
            vec![[0.0, 0.0, 0.0], [1.25, -3.5, 0.75], [1e-7, 2e6, -0.125]],
        )
        .unwrap()
        .with_comment("unit test cloud")
        .with_colors(vec![[255, 0, 0], [0, 255, 0], [0, 0, 255]])
        .unwrap()
        .with_normals(vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [f64::NAN; 3]])
        .unwrap()
        .with_roughness_field(&field)
        .unwrap()
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempdir();
        let path = dir.path().join("rt.ply");
        let cloud = sample_cloud();
        save_ply(&cloud, &path, PlyFormat::BinaryLittleEndian).unwrap();
        let back = load_ply(&path).unwrap();
        assert_eq!(back.points(), cloud.points());
        assert_eq!(back.colors(), cloud.colors());
        let field = back.scalar_field("roughness_r0_2").unwrap();
        assert_eq!(field[0], Some(0.1f32 as f64));
        assert_eq!(field[1], None);
        assert_eq!(field[2], Some(0.25));
        let normals = back.normals().unwrap();
        assert_eq!(normals[0], [0.0, 0.0, 1.0]);
        assert!(normals[2][0].is_nan());
        assert_eq!(back.comments(), cloud.comments());
    }

    #[test]
    fn ascii_and_binary_encodings_load_identically() {
        let dir = tempdir();
        let cloud = sample_cloud();
        let a = dir.path().join("a.ply");
        let b = dir.path().join("b.ply");
        save_ply(&cloud, &a, PlyFormat::Ascii).unwrap();
        save_ply(&cloud, &b, PlyFormat::BinaryLittleEndian).unwrap();
        let ca = load_ply(&a).unwrap();
        let cb = load_ply(&b).unwrap();
        assert_eq!(ca.points(), cb.points());
        assert_eq!(ca.colors(), cb.colors());
        assert_eq!(
            ca.scalar_field("roughness_r0_2"),
            cb.scalar_field("roughness_r0_2")
        );
        for (na, nb) in ca
            .normals()
            .unwrap()
            .iter()
            .zip(cb.normals().unwrap())
        {
            for k in 0..3 {
                assert!(na[k] == nb[k] || (na[k].is_nan() && nb[k].is_nan()));
            }
        }
    }

    #[test]
    fn extra_float_property_becomes_scalar_field() {
        let dir = tempdir();
        let path = write_file(
            &dir,
            "extra.ply",
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty float roughness_r0_2\nend_header\n0 0 0 0.5\n1 1 1 nan\n",
        );
        let cloud = load_ply(&path).unwrap();
        let field = cloud.scalar_field("roughness_r0_2").unwrap();
        assert_eq!(field[0], Some(0.5));
        assert_eq!(field[1], None);
    }

    #[test]
    fn integer_extras_are_skipped_but_parsed() {
        let dir = tempdir();
        let path = write_file(
            &dir,
            "ints.ply",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty int cluster\nend_header\n0 0 0 42\n",
        );
        let cloud = load_ply(&path).unwrap();
        assert!(cloud.scalar_field("cluster").is_none());
        // Out-of-range integers still fail loudly.
        let bad = write_file(
            &dir,
            "badint.ply",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty uchar tag\nend_header\n0 0 0 300\n",
        );
        assert!(matches!(load_ply(&bad), Err(Error::MalformedBody { .. })));
    }

    #[test]
    fn elements_around_the_vertex_element_are_skipped() {
        let dir = tempdir();
        // One list-bearing element before vertex, one after: both skipped.
        let path = write_file(
            &dir,
            "sandwich.ply",
            "ply\nformat ascii 1.0\n\
             element info 2\nproperty list uchar int tags\n\
             element vertex 2\nproperty float x\nproperty float y\nproperty float z\n\
             element face 1\nproperty list uchar int vertex_indices\n\
             end_header\n\
             3 7 8 9\n0\n\
             0 0 0\n1 1 1\n\
             2 0 1\n",
        );
        let cloud = load_ply(&path).unwrap();
        assert_eq!(cloud.points(), &[[0.0; 3], [1.0; 3]]);
    }

    #[test]
    fn binary_list_elements_before_vertex_are_skipped() {
        let dir = tempdir();
        let path = dir.path().join("faces_first.ply");
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement info 1\nproperty list uchar int tags\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\nend_header\n".to_vec();
        bytes.push(2); // list count
        bytes.extend_from_slice(&7i32.to_le_bytes());
        bytes.extend_from_slice(&8i32.to_le_bytes());
        for c in [1.5f64, 2.5, 3.5] {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
        std::fs::write(&path, bytes).unwrap();
        let cloud = load_ply(&path).unwrap();
        assert_eq!(cloud.points(), &[[1.5, 2.5, 3.5]]);
    }

    #[test]
    fn double_positions_survive_binary_exactly() {
        let dir = tempdir();
        let path = dir.path().join("precise.ply");
        let awkward = [
            [std::f64::consts::PI, -std::f64::consts::E, 1e-300],
            [6.02214076e23, -0.1, 0.3],
        ];
        let cloud = PointCloud::new("precise", awkward.to_vec()).unwrap();
        save_ply(&cloud, &path, PlyFormat::BinaryLittleEndian).unwrap();
        assert_eq!(load_ply(&path).unwrap().points(), &awkward);
    }

    #[test]
    fn ascii_positions_survive_exactly_via_shortest_round_trip() {
        let dir = tempdir();
        let path = dir.path().join("precise_ascii.ply");
        let awkward = [[std::f64::consts::PI, -1.0 / 3.0, 1e-17]];
        let cloud = PointCloud::new("p", awkward.to_vec()).unwrap();
        save_ply(&cloud, &path, PlyFormat::Ascii).unwrap();
        assert_eq!(load_ply(&path).unwrap().points(), &awkward);
    }

    #[test]
    fn field_names_are_sanitized_and_deduplicated() {
        let dir = tempdir();
        let path = dir.path().join("sanitize.ply");
        let cloud = PointCloud::new("s", vec![[0.0; 3]])
            .unwrap()
            .with_scalar_field("weird name!", vec![Some(1.0)])
            .unwrap()
            .with_scalar_field("weird_name_", vec![Some(2.0)])
            .unwrap();
        save_ply(&cloud, &path, PlyFormat::Ascii).unwrap();
        let back = load_ply(&path).unwrap();
        let names: Vec<&str> = back.scalar_fields().keys().map(String::as_str).collect();
        assert_eq!(names.len(), 2);
        assert!(names.contains(&"weird_name_"));
        assert!(names.iter().all(|n| n
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')));
    }

    #[test]
    fn saving_an_empty_cloud_is_an_error() {
        let dir = tempdir();
        let cloud = PointCloud::new("empty", vec![]).unwrap();
        assert!(matches!(
            save_ply(&cloud, dir.path().join("e.ply"), PlyFormat::Ascii),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(
            load_ply("/nonexistent/nowhere.ply"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn zero_count_vertex_element_loads_as_empty_cloud() {
        let dir = tempdir();
        let path = write_file(
            &dir,
            "zero.ply",
            "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        );
        assert!(load_ply(&path).unwrap().is_empty());
    }

    #[test]
    fn crlf_headers_are_accepted() {
        let dir = tempdir();
        let text = THREE_POINT_ASCII.replace('\n', "\r\n");
        let path = write_file(&dir, "crlf.ply", &text);
        let cloud = load_ply(&path).unwrap();
        assert_eq!(cloud.len(), 3);
    }

    #[test]
    fn sized_type_aliases_are_accepted() {
        let dir = tempdir();
        let path = write_file(
            &dir,
            "sized.ply",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float32 x\nproperty float32 y\nproperty float64 z\nend_header\n0.5 0.25 0.125\n",
        );
        let cloud = load_ply(&path).unwrap();
        assert_eq!(cloud.points(), &[[0.5, 0.25, 0.125]]);
    }

    #[test]
    fn non_unit_normals_are_normalized_on_load() {
        let dir = tempdir();
        let path = write_file(
            &dir,
            "norms.ply",
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty float nx\nproperty float ny\nproperty float nz\nend_header\n0 0 0 0 0 2\n1 1 1 0 0 0\n",
        );
        let cloud = load_ply(&path).unwrap();
        let normals = cloud.normals().unwrap();
        assert_eq!(normals[0], [0.0, 0.0, 1.0]);
        assert!(normals[1][0].is_nan(), "zero normal becomes undefined");
    }
}
