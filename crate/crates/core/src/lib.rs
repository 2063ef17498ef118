//! Dense long-term point tracking by multi-delta optical-flow chaining.
//!
//! The engine composes flow fields over several time deltas at once,
//! including the direct reference-to-current flow, and keeps per-pixel the
//! chain with the lowest accumulated uncertainty among those not flagged
//! occluded. Occlusion scores chain by maximum, uncertainties by addition,
//! flow by addition at bilinearly sampled positions.
//!
//! The crate ships everything needed to run and validate the engine without
//! a learned flow estimator: exact synthetic scenes ([`synth`]), a calibrated
//! noise model, bit-exact flow/map file formats and a precomputed-flow
//! provider ([`flowio`]), and the benchmark metrics and protocol
//! ([`metrics`]).

pub mod chaining;
pub mod error;
pub mod flowio;
pub mod metrics;
pub mod rng;
pub mod sampling;
pub mod selector;
pub mod synth;
pub mod tracker;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    FlowField, FouTriplet, PositionMap, QuerySet, ScalarMap, Tracklet, TrackletEntry, Vec2,
};

/// Default occlusion threshold; scores above it count as occluded.
pub const DEFAULT_THETA_O: f32 = 0.02;

/// Default delta set used by the tracker.
pub const DEFAULT_DELTAS: &str = "inf,1,2,4,8,16,32";
