use thiserror::Error;

use crate::gvf::LevelSample;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid dimensions must be positive, got {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },

    #[error("graph must have at least one vertex")]
    EmptyGraph,

    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),

    #[error("vertex {vertex} out of range (graph has {count} vertices)")]
    InvalidVertex { vertex: usize, count: usize },

    #[error("graph is disconnected: vertex {0} is unreachable from vertex 0")]
    Disconnected(usize),

    #[error("vertex {vertex} sampled twice with conflicting levels {first} and {second}")]
    ConflictingSamples { vertex: usize, first: i64, second: i64 },

    #[error(
        "samples are not gradually varied: |{} - {}| > d({}, {}) = {distance}",
        .a.level, .b.level, .a.vertex, .b.vertex
    )]
    Infeasible { a: LevelSample, b: LevelSample, distance: usize },

    #[error("no guiding points")]
    EmptySamples,

    #[error("guiding point {0} has not been located on the grid")]
    Unlocated(usize),

    #[error("guiding point {index} lies outside the {rows}x{cols} grid at ({row}, {col})")]
    SampleOutOfGrid { index: usize, row: usize, col: usize, rows: usize, cols: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch { expected: (usize, usize), actual: (usize, usize) },

    #[error("field must be at least 2x2, got {rows}x{cols}")]
    FieldTooSmall { rows: usize, cols: usize },

    #[error("cell ({row}, {col}) is on the boundary")]
    BoundaryCell { row: usize, col: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("line {line}: {message} (token {token:?})")]
    Parse { line: usize, token: String, message: String },

    #[error("point {index} ({lat}, {lon}) lies outside the grid box")]
    OutsideBox { index: usize, lat: f64, lon: f64 },

    #[error("degenerate bounding box")]
    DegenerateBox,

    #[error("time indices must be strictly increasing ({previous} then {next})")]
    UnsortedTimes { previous: u32, next: u32 },

    #[error("non-finite value in field at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
