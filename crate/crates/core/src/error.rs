//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {path} (line {line}): {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("degenerate face: {0}")]
    DegenerateFace(String),

    #[error("degenerate image face {face}: signed area {area:e} below threshold")]
    DegenerateImageFace { face: usize, area: f64 },

    #[error("index error: {0}")]
    Index(String),

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("lambda {0} outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("boundary vertex {vertex} is {dist:e} away from the unit circle")]
    BoundaryOffCircle { vertex: usize, dist: f64 },

    #[error("non-positive image area {0:e}")]
    NonPositiveImageArea(f64),

    #[error("line search failed to find a sufficient decrease")]
    LineSearchFailure,

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("corner order error: {0}")]
    CornerOrder(String),

    #[error("map has {folds} folded triangles; a fold-free map is required")]
    FoldedMap { folds: usize },

    #[error("point location failed for pixel ({u}, {v})")]
    PointLocationFailure { u: f64, v: f64 },

    #[error("missing sidecar file: {0}")]
    MissingSidecar(String),

    #[error("image error: {0}")]
    Image(String),

    #[error("empty input")]
    EmptyInput,
}

impl Error {
    /// Stable one-word category used by the CLI for machine-parseable output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Topology(_) => "topology",
            Error::DegenerateFace(_) => "degenerate-face",
            Error::DegenerateImageFace { .. } => "degenerate-image-face",
            Error::Index(_) => "index",
            Error::NotPositiveDefinite { .. } => "not-positive-definite",
            Error::Shape(_) => "shape",
            Error::LambdaOutOfRange(_) => "lambda-out-of-range",
            Error::BoundaryOffCircle { .. } => "boundary-off-circle",
            Error::NonPositiveImageArea(_) => "non-positive-image-area",
            Error::LineSearchFailure => "line-search",
            Error::SingularSystem(_) => "singular-system",
            Error::CornerOrder(_) => "corner-order",
            Error::FoldedMap { .. } => "folded-map",
            Error::PointLocationFailure { .. } => "point-location",
            Error::MissingSidecar(_) => "missing-sidecar",
            Error::Image(_) => "image",
            Error::EmptyInput => "empty-input",
        }
    }

    /// True for failures that a line search may recover from by shrinking the
    /// step (the trial configuration folded or degenerated, it is not broken
    /// input).
    pub(crate) fn is_step_rejectable(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveImageArea(_) | Error::DegenerateImageFace { .. }
        )
    }
}
