//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. The variants
//! are deliberately fine-grained so callers (and the CLI) can report what
//! went wrong without string-matching.

use std::path::PathBuf;

/// Errors produced by cloud construction, file ingestion, geometry and
/// analysis operations.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// Operation needs at least one point.
    #[error("cloud contains no points")]
    EmptyCloud,

    /// A per-point attribute does not match the cloud's point count.
    #[error("{what} has {got} entries but the cloud has {expected} points")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    /// Positions must be finite; NaN/inf coordinates are never stored.
    #[error("non-finite coordinate at point index {0}")]
    NonFinitePosition(usize),

    /// A rotation matrix failed the orthonormality / determinant check.
    #[error("rotation must be orthonormal with determinant +1 (deviation {deviation:.3e})")]
    InvalidRotation { deviation: f64 },

    /// Generic argument validation failure; the message states the rule.
    #[error("{0}")]
    InvalidArgument(String),

    /// Underlying filesystem error, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The PLY header is not syntactically valid.
    #[error("malformed PLY header: {0}")]
    MalformedHeader(String),

    /// The PLY file is valid but uses a feature this reader does not accept.
    #[error("unsupported PLY feature: {0}")]
    UnsupportedFormat(String),

    /// The PLY header declares no `vertex` element.
    #[error("PLY file declares no vertex element")]
    MissingVertexElement,

    /// The PLY body ended before all declared records were read.
    #[error("PLY body ends early: {0}")]
    TruncatedBody(String),

    /// A PLY body value could not be decoded.
    #[error("PLY body line {line}: {detail}")]
    MalformedBody { line: usize, detail: String },

    /// An XYZ/CSV row contained a non-numeric token (1-based line number).
    #[error("line {0}: row is not numeric")]
    NonNumericRow(usize),

    /// An XYZ/CSV row had fewer than three columns (1-based line number).
    #[error("line {0}: fewer than three columns")]
    TooFewColumns(usize),

    /// A Gaussian-splat PLY lacks one of the required vertex properties.
    #[error("splat PLY is missing vertex property '{0}'")]
    MissingSplatProperty(String),

    /// A splat container with zero splats cannot be converted.
    #[error("splat set contains no splats")]
    EmptySet,

    /// Spatial index cell edge must be a positive finite length.
    #[error("cell edge must be positive and finite, got {0}")]
    NonPositiveCellEdge(f64),

    /// Plane fitting needs at least three points.
    #[error("plane fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    /// The neighborhood is collinear or coincident; no unique plane exists.
    #[error("neighborhood is collinear or coincident; no unique plane")]
    DegenerateNeighborhood,

    /// The cloud has no dominant plane to align to.
    #[error("no dominant plane: smallest covariance eigenvalue is not clearly separated")]
    AmbiguousOrientation,

    /// The bounding box diagonal is zero; no scale can be derived.
    #[error("bounding box has zero extent; cannot derive a scale")]
    ZeroExtent,

    /// A cropping polygon is not usable (too few vertices, self-intersection, ...).
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    /// Statistics were requested for a field with zero defined values.
    #[error("field has no defined values")]
    NoDefinedValues,

    /// Clouds in a comparison carry different radius sets.
    #[error("clouds carry different radius sets: {0}")]
    MismatchedRadii(String),

    /// Clouds in a comparison carry different metric variants.
    #[error("clouds carry different metric variants")]
    MismatchedVariant,

    /// A synthetic surface description is invalid; the message states why.
    #[error("invalid surface spec: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// Stable short name of the error kind, suitable for CLI diagnostics
    /// and log grepping.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptyCloud => "EmptyCloud",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NonFinitePosition(_) => "NonFinitePosition",
            Error::InvalidRotation { .. } => "InvalidRotation",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io { .. } => "Io",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::MissingVertexElement => "MissingVertexElement",
            Error::TruncatedBody(_) => "TruncatedBody",
            Error::MalformedBody { .. } => "MalformedBody",
            Error::NonNumericRow(_) => "NonNumericRow",
            Error::TooFewColumns(_) => "TooFewColumns",
            Error::MissingSplatProperty(_) => "MissingSplatProperty",
            Error::EmptySet => "EmptySet",
            Error::NonPositiveCellEdge(_) => "NonPositiveCellEdge",
            Error::TooFewPoints(_) => "TooFewPoints",
            Error::DegenerateNeighborhood => "DegenerateNeighborhood",
            Error::AmbiguousOrientation => "AmbiguousOrientation",
            Error::ZeroExtent => "ZeroExtent",
            Error::InvalidPolygon(_) => "InvalidPolygon",
            Error::NoDefinedValues => "NoDefinedValues",
            Error::MismatchedRadii(_) => "MismatchedRadii",
            Error::MismatchedVariant => "MismatchedVariant",
            Error::InvalidSpec(_) => "InvalidSpec",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
