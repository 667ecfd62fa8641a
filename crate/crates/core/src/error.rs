use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("{path}: expected {expected_w}x{expected_h}, found {found_w}x{found_h}")]
    DimensionMismatch {
        path: PathBuf,
        expected_w: u32,
        expected_h: u32,
        found_w: u32,
        found_h: u32,
    },

    #[error("frame size mismatch: {0}x{1} vs {2}x{3}")]
    FrameSizeMismatch(u32, u32, u32, u32),

    #[error("frame too small: {width}x{height}, need at least {min}x{min}")]
    FrameTooSmall { width: u32, height: u32, min: u32 },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    FeatureDimension { expected: usize, found: usize },

    #[error("region {x},{y} {w}x{h} lies outside {frame_w}x{frame_h} frame")]
    RegionOutOfBounds {
        x: u32,
        y: u32,
        w: u32,
        h: u32,
        frame_w: u32,
        frame_h: u32,
    },

    #[error("scorer `{scorer}` failed on candidate {candidate}: {reason}")]
    Scorer {
        scorer: String,
        candidate: usize,
        reason: String,
    },

    #[error("index {index} out of range for {len} candidates")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("backend failed: {0}")]
    Backend(String),

    #[error("backend timed out after {0} s")]
    BackendTimeout(u64),

    #[error("missing backend output: {0}")]
    MissingOutput(String),

    #[error("mismatched feature sets: {0}")]
    MismatchedFeatures(String),

    #[error("insufficient samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("matrix square root failed: {0}")]
    MatrixSqrt(String),

    #[error("duplicate vote from participant `{participant}` for `{option}` on question `{question}`")]
    DuplicateVote {
        question: String,
        participant: String,
        option: String,
    },

    #[error("unknown option `{option}` for question `{question}`")]
    UnknownOption { question: String, option: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn with_path(e: std::io::Error, path: &std::path::Path) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {}", path.display(), e)))
        }
    }
}
