use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed text input. `location` names the offending line or record.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("reach oracle failed at cell ({row}, {col}): {message}")]
    Oracle {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("required grasp width {required:.4} m exceeds the maximum opening {max_opening:.4} m")]
    WidthExceeded { required: f64, max_opening: f64 },

    #[error("point ({x}, {y}, {z}) is behind the camera")]
    BehindCamera { x: f64, y: f64, z: f64 },

    #[error("missing asset: {0}")]
    Asset(String),

    #[error("mask dimensions differ: {0}")]
    DimensionMismatch(String),

    #[error("invalid trial event: {0}")]
    InvalidEvent(String),

    #[error("duplicate trial record for scene {scene_id}, object {object_id}, ordering {ordering}")]
    DuplicateRecord {
        scene_id: String,
        object_id: String,
        ordering: String,
    },

    #[error("scene generation failed after {restarts} restarts: placed {placed} of {requested} objects")]
    GenerationFailed {
        restarts: usize,
        placed: usize,
        requested: usize,
        partial: Box<crate::scene::Scene>,
    },

    #[error("no feasible scene from seed {seed} after {attempts} attempts")]
    NoFeasibleScene { seed: u64, attempts: usize },

    #[error("scene selection failed: {0}")]
    SelectionFailed(crate::select::RejectionStats),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
