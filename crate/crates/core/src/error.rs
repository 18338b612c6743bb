use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("unsupported depth (maxval {maxval}) at byte {offset}")]
    UnsupportedDepth { offset: usize, maxval: u32 },
    #[error("truncated payload at byte {offset}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("malformed mask: pixel {index} has value {value}, expected 0 or {maxval}")]
    MalformedMask {
        index: usize,
        value: u32,
        maxval: u32,
    },
    #[error("field is empty ({width}x{height})")]
    EmptyField { width: usize, height: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("cell ({cx}, {cy}) lies outside the complex")]
    OutOfBounds { cx: usize, cy: usize },
    #[error("cell ({cx}, {cy}) is not a critical edge")]
    NotASaddle { cx: usize, cy: usize },
    #[error("theta list is empty")]
    EmptyThetaList,
    #[error("{count} branches exceed the enumeration limit of {limit}")]
    TooManyBranches { count: usize, limit: usize },
    #[error("degenerate sigma: the distribution has sigma = 0")]
    DegenerateSigma,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("invalid levels: need 0 <= saddle < peak2 <= peak1 <= 1, got ({peak1}, {peak2}, {saddle})")]
    InvalidLevels { peak1: f64, peak2: f64, saddle: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("ground truth has no foreground pixels")]
    EmptyForeground,
    #[error("patch size {patch} exceeds image {width}x{height}")]
    PatchTooLarge {
        patch: usize,
        width: usize,
        height: usize,
    },
    #[error("unknown branch {0}")]
    UnknownBranch(u32),
    #[error("branch {branch} is already {state}; decision would not change anything")]
    NoOpDecision { branch: u32, state: &'static str },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IoFailure",
            Error::MalformedHeader { .. } => "MalformedHeader",
            Error::UnsupportedDepth { .. } => "UnsupportedDepth",
            Error::TruncatedPayload { .. } => "TruncatedPayload",
            Error::MalformedMask { .. } => "MalformedMask",
            Error::EmptyField { .. } => "EmptyField",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::OutOfBounds { .. } => "OutOfBounds",
            Error::NotASaddle { .. } => "NotASaddle",
            Error::EmptyThetaList => "EmptyThetaList",
            Error::TooManyBranches { .. } => "TooManyBranches",
            Error::DegenerateSigma => "DegenerateSigma",
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidLevels { .. } => "InvalidLevels",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::EmptyForeground => "EmptyForeground",
            Error::PatchTooLarge { .. } => "PatchTooLarge",
            Error::UnknownBranch(_) => "UnknownBranch",
            Error::NoOpDecision { .. } => "NoOpDecision",
            Error::Json(_) => "Json",
        }
    }
}
