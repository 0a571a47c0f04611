use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at feature {index}: {message}")]
    Parse { index: usize, message: String },

    #[error("malformed network document: {0}")]
    Malformed(String),

    #[error("duplicate edge ({start}, {end}, {key})")]
    DuplicateEdge { start: String, end: String, key: u32 },

    #[error("unknown node ids: {}", .0.join(", "))]
    UnknownNodes(Vec<String>),

    #[error("unknown edges: {}", .0.join(", "))]
    UnknownEdges(Vec<String>),

    #[error("edge ({start}, {end}, {key}) has zero length")]
    ZeroLengthEdge { start: String, end: String, key: u32 },

    #[error("edge ({start}, {end}, {key}) has no geometry")]
    MissingGeometry { start: String, end: String, key: u32 },

    #[error("geometry endpoint {offset:.4} m from node {node} exceeds snap tolerance")]
    SnapTolerance { node: String, offset: f64 },

    #[error("coordinate out of range: lon {lon}, lat {lat}")]
    CoordinateRange { lon: f64, lat: f64 },

    #[error("network spans UTM zones {min_zone}..={max_zone}; split it before projecting")]
    ZoneSpan { min_zone: u32, max_zone: u32 },

    #[error("graph already projected ({0})")]
    AlreadyProjected(String),

    #[error("nothing survived cleaning")]
    NothingSurvived,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown measure: {0}")]
    UnknownMeasure(String),

    #[error("unknown category: {0}")]
    UnknownCategory(String),

    #[error("entry {entry}: {message}")]
    InvalidEntry { entry: String, message: String },

    #[error("metrics length {found} does not match {expected} {what}")]
    MetricsShape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("distance {distance} exceeds window {d_max}")]
    OutsideWindow { distance: f64, d_max: f64 },
}
