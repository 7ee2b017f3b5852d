use std::path::PathBuf;

/// Errors produced by the geometry, saliency, scanning and evaluation code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("insufficient neighborhood: k = {k} with {points} points")]
    InsufficientNeighborhood { k: usize, points: usize },
    #[error("point cloud has no normals")]
    MissingNormals,
    #[error("point cloud has no provenance")]
    MissingProvenance,
    #[error("zero baseline between coincident points")]
    ZeroBaseline,
    #[error("too many clusters: K = {k} with {points} points")]
    TooManyClusters { k: usize, points: usize },
    #[error("degenerate positive set: {positives} positives among {total} points")]
    DegeneratePositiveSet { positives: usize, total: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no participants")]
    NoParticipants,
    #[error("all participants have empty selections")]
    EmptySelections,
    #[error("unknown class label for shape `{0}`")]
    UnknownClass(String),
    #[error("spectral solver failed: {0}")]
    Spectral(String),
    #[error("no usable shapes: {0}")]
    NoUsableShapes(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: byte offset {offset}: {message}")]
    ParseBinary {
        path: PathBuf,
        offset: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or missing input data, as opposed to
    /// invalid parameters.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::ParseBinary { .. }
                | Error::Io { .. }
                | Error::InvalidMesh(_)
                | Error::IndexOutOfRange { .. }
                | Error::LengthMismatch { .. }
                | Error::EmptySelections
                | Error::NoParticipants
                | Error::UnknownClass(_)
        )
    }
}
