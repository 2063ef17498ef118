use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("grid data length {got} does not match {width}x{height} = {expected}")]
    DataLength {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("occlusion score {value} outside [0, 1]")]
    OcclusionRange { value: f32 },

    #[error("negative uncertainty {value}")]
    NegativeUncertainty { value: f32 },

    #[error("grid size mismatch: {0}x{1} vs {2}x{3}")]
    GridMismatch(usize, usize, usize, usize),

    #[error("frame mismatch: chain needs prev.dst_frame == step.src_frame, got {prev_dst} and {step_src}")]
    FrameMismatch { prev_dst: usize, step_src: usize },

    #[error("non-finite sample position ({x}, {y})")]
    NonFinitePosition { x: f32, y: f32 },

    #[error("empty candidate list")]
    EmptyCandidates,

    #[error("too many candidates ({0}); index maps hold at most 256")]
    TooManyCandidates(usize),

    #[error("candidate index {index} out of range for {count} candidates")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("occlusion threshold {value} must lie in (0, 1)")]
    ThresholdRange { value: f32 },

    #[error("invalid delta set: {reason}")]
    InvalidDeltaSet { reason: String },

    #[error("unknown direction {0:?} (expected fwd or bwd)")]
    UnknownDirection(String),

    #[error("query ({x}, {y}) outside reference frame {width}x{height}")]
    QueryOutOfBounds {
        x: f32,
        y: f32,
        width: usize,
        height: usize,
    },

    #[error("frame {frame} out of range; sequence has {num_frames} frames")]
    FrameOutOfRange { frame: usize, num_frames: usize },

    #[error("result list is inconsistent: {reason}")]
    ResultSequence { reason: String },

    #[error("provider failed for frame pair ({src}, {dst}): {message}")]
    Provider {
        src: usize,
        dst: usize,
        message: String,
    },

    #[error("invalid scene: {reason}")]
    Scene { reason: String },

    #[error("invalid noise model: {reason}")]
    Noise { reason: String },

    #[error("sigma2 must be positive, got {value}")]
    SigmaRange { value: f64 },

    #[error("mask area must be positive, got {value}")]
    MaskArea { value: f64 },

    #[error("length mismatch: {left} vs {right} {context}")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic")]
    BadMagic { path: PathBuf },

    #[error("{path}: truncated file ({reason})")]
    Truncated { path: PathBuf, reason: String },

    #[error("{path}: implausible dimensions {width}x{height}")]
    BadFileDimensions {
        path: PathBuf,
        width: i32,
        height: i32,
    },

    #[error("{path}: map kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },

    #[error("manifest: {reason}")]
    Manifest { reason: String },

    #[error("frame pair ({src}, {dst}) is not listed in the manifest")]
    MissingPair { src: usize, dst: usize },

    #[error(
        "delta sets with 'inf' cannot be precomputed; use integer deltas for file-backed tracking"
    )]
    InfNotPrecomputable,

    #[error("evaluation: {reason}")]
    Evaluation { reason: String },

    #[error("track file: {reason}")]
    TrackFile { reason: String },
}

impl Error {
    /// Wraps an io error together with the offending path.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
