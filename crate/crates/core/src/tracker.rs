//! The multi-delta tracking loop.
//!
//! The tracker holds the reference frame at index 0 of the tracked sequence
//! and, at every new frame `t`, builds one candidate per time delta by
//! chaining the memorized result for frame `max(0, t - delta)` with the
//! provider's flow from that frame to `t`. The `inf` delta uses the direct
//! reference-to-current flow. Per-pixel selection picks the winner, the
//! composed result is memorized, and entries older than the largest integer
//! delta are evicted. Backward tracking remaps frame indices inside a
//! provider wrapper so the engine always sees an increasing sequence.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::chaining::chain;
use crate::error::{Error, Result};
use crate::sampling::{sample_flow, sample_scalar};
use crate::selector::{compose_result, select_best};
use crate::types::{FouTriplet, QuerySet, Tracklet, TrackletEntry};

/// One time delta: either the direct reference-to-current flow or a positive
/// frame gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Delta {
    /// Direct flow from the reference frame, written `inf`.
    Inf,
    /// Flow from `t - gap` to `t`.
    Step(u32),
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Inf => write!(f, "inf"),
            Delta::Step(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for Delta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Delta::Inf);
        }
        let v: u32 = s.parse().map_err(|_| Error::InvalidDeltaSet {
            reason: format!("cannot parse delta {s:?}"),
        })?;
        if v == 0 {
            return Err(Error::InvalidDeltaSet {
                reason: "integer deltas must be positive".into(),
            });
        }
        Ok(Delta::Step(v))
    }
}

/// Ordered, validated set of deltas. Integer deltas must be strictly
/// increasing and `inf` may appear at most once; the declaration order
/// doubles as the tie-break order during selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaSet {
    deltas: Vec<Delta>,
}

impl DeltaSet {
    pub fn new(deltas: Vec<Delta>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidDeltaSet {
                reason: "delta set is empty".into(),
            });
        }
        let mut last_step: Option<u32> = None;
        let mut seen_inf = false;
        for d in &deltas {
            match d {
                Delta::Inf => {
                    if seen_inf {
                        return Err(Error::InvalidDeltaSet {
                            reason: "inf appears more than once".into(),
                        });
                    }
                    seen_inf = true;
                }
                Delta::Step(v) => {
                    if let Some(prev) = last_step {
                        if *v <= prev {
                            return Err(Error::InvalidDeltaSet {
                                reason: format!(
                                    "integer deltas must be strictly increasing ({prev} then {v})"
                                ),
                            });
                        }
                    }
                    last_step = Some(*v);
                }
            }
        }
        Ok(DeltaSet { deltas })
    }

    /// Parses a comma-separated list such as `"inf,1,2,4,8,16,32"`.
    pub fn parse(s: &str) -> Result<Self> {
        let deltas = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(Delta::from_str)
            .collect::<Result<Vec<_>>>()?;
        DeltaSet::new(deltas)
    }

    pub fn deltas(&self) -> &[Delta] {
        &self.deltas
    }

    pub fn contains_inf(&self) -> bool {
        self.deltas.iter().any(|d| matches!(d, Delta::Inf))
    }

    /// Largest integer delta, `None` for pure-`inf` sets.
    pub fn max_step(&self) -> Option<u32> {
        self.deltas
            .iter()
            .filter_map(|d| match d {
                Delta::Step(v) => Some(*v),
                Delta::Inf => None,
            })
            .max()
    }

    pub fn integer_deltas(&self) -> Vec<u32> {
        self.deltas
            .iter()
            .filter_map(|d| match d {
                Delta::Step(v) => Some(*v),
                Delta::Inf => None,
            })
            .collect()
    }
}

impl fmt::Display for DeltaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.deltas.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Source of flow/occlusion/uncertainty triplets for frame pairs.
///
/// Implementations must behave as pure functions: `get(a, a)` is the identity
/// triplet and repeated calls with the same arguments return identical data.
/// `get` is called concurrently.
pub trait FlowProvider: Sync {
    fn get(&self, src_frame: usize, dst_frame: usize) -> Result<Arc<FouTriplet>>;
}

/// Provider adapter shifting engine frame indices by a constant offset.
pub struct ShiftedProvider<'a, P: FlowProvider + ?Sized> {
    inner: &'a P,
    offset: usize,
}

impl<'a, P: FlowProvider + ?Sized> ShiftedProvider<'a, P> {
    pub fn new(inner: &'a P, offset: usize) -> Self {
        ShiftedProvider { inner, offset }
    }
}

impl<P: FlowProvider + ?Sized> FlowProvider for ShiftedProvider<'_, P> {
    fn get(&self, src_frame: usize, dst_frame: usize) -> Result<Arc<FouTriplet>> {
        let t = self
            .inner
            .get(src_frame + self.offset, dst_frame + self.offset)?;
        Ok(restamp(t, src_frame, dst_frame))
    }
}

/// Provider adapter running time in reverse: engine frame `e` maps to real
/// frame `last - e`, so backward tracking reuses the forward engine verbatim.
pub struct ReversedProvider<'a, P: FlowProvider + ?Sized> {
    inner: &'a P,
    last: usize,
}

impl<'a, P: FlowProvider + ?Sized> ReversedProvider<'a, P> {
    pub fn new(inner: &'a P, last: usize) -> Self {
        ReversedProvider { inner, last }
    }
}

impl<P: FlowProvider + ?Sized> FlowProvider for ReversedProvider<'_, P> {
    fn get(&self, src_frame: usize, dst_frame: usize) -> Result<Arc<FouTriplet>> {
        if src_frame > self.last || dst_frame > self.last {
            return Err(Error::Provider {
                src: src_frame,
                dst: dst_frame,
                message: format!("reversed provider covers frames 0..={}", self.last),
            });
        }
        let t = self
            .inner
            .get(self.last - src_frame, self.last - dst_frame)?;
        Ok(restamp(t, src_frame, dst_frame))
    }
}

fn restamp(t: Arc<FouTriplet>, src: usize, dst: usize) -> Arc<FouTriplet> {
    if t.src_frame == src && t.dst_frame == dst {
        return t;
    }
    let mut owned = (*t).clone();
    owned.src_frame = src;
    owned.dst_frame = dst;
    Arc::new(owned)
}

/// Tracking direction over the real frame sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Forward => write!(f, "fwd"),
            Direction::Backward => write!(f, "bwd"),
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fwd" | "forward" => Ok(Direction::Forward),
            "bwd" | "backward" => Ok(Direction::Backward),
            other => Err(Error::UnknownDirection(other.to_string())),
        }
    }
}

/// Mutable tracking state: delta set, threshold, and the memorized results
/// `FOU(0 -> k)` for recent frames `k`.
pub struct Tracker {
    width: usize,
    height: usize,
    delta_set: DeltaSet,
    theta_o: f32,
    memory: BTreeMap<usize, Arc<FouTriplet>>,
    current_frame: usize,
}

impl Tracker {
    /// Initializes tracking at frame 0 with the all-zero identity result.
    pub fn init(width: usize, height: usize, delta_set: DeltaSet, theta_o: f32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if !(theta_o > 0.0 && theta_o < 1.0) {
            return Err(Error::ThresholdRange { value: theta_o });
        }
        let mut memory = BTreeMap::new();
        memory.insert(0, Arc::new(FouTriplet::identity(width, height, 0)?));
        Ok(Tracker {
            width,
            height,
            delta_set,
            theta_o,
            memory,
            current_frame: 0,
        })
    }

    pub fn current_frame(&self) -> usize {
        self.current_frame
    }

    /// Number of memorized result triplets; bounded by the largest integer
    /// delta plus one.
    pub fn memory_len(&self) -> usize {
        self.memory.len()
    }

    pub fn theta_o(&self) -> f32 {
        self.theta_o
    }

    /// Memorized result for the current frame.
    pub fn current_result(&self) -> Option<&Arc<FouTriplet>> {
        self.memory.get(&self.current_frame)
    }

    /// Distinct candidate source frames for time `t`, in delta order.
    /// Several deltas can clamp to the same source early in the sequence
    /// (and `inf` always uses frame 0); those candidates are identical and
    /// computed once.
    fn candidate_sources(&self, t: usize) -> Vec<usize> {
        let mut sources = Vec::with_capacity(self.delta_set.deltas().len());
        for d in self.delta_set.deltas() {
            let s = match d {
                Delta::Inf => 0,
                Delta::Step(v) => t.saturating_sub(*v as usize),
            };
            if !sources.contains(&s) {
                sources.push(s);
            }
        }
        sources
    }

    fn memorized(&self, frame: usize) -> Result<Arc<FouTriplet>> {
        if let Some(r) = self.memory.get(&frame) {
            return Ok(Arc::clone(r));
        }
        // Frame 0 may have been evicted; its result is the identity and is
        // reconstructed on demand.
        if frame == 0 {
            return Ok(Arc::new(FouTriplet::identity(self.width, self.height, 0)?));
        }
        Err(Error::ResultSequence {
            reason: format!("memorized result for frame {frame} missing"),
        })
    }

    /// Advances to the next frame, returning the composed result
    /// `FOU(0 -> current_frame + 1)`.
    pub fn step(&mut self, provider: &dyn FlowProvider) -> Result<Arc<FouTriplet>> {
        Ok(self.step_with_indices(provider)?.0)
    }

    /// As [`Tracker::step`], also exposing the per-pixel winning delta index
    /// (into the deduplicated candidate list).
    pub fn step_with_indices(
        &mut self,
        provider: &dyn FlowProvider,
    ) -> Result<(Arc<FouTriplet>, crate::selector::DeltaIndexMap)> {
        let t = self.current_frame + 1;

        let mut candidates = Vec::new();
        for s in self.candidate_sources(t) {
            let prev = self.memorized(s)?;
            let step = provider.get(s, t)?;
            if step.src_frame != s || step.dst_frame != t {
                return Err(Error::Provider {
                    src: s,
                    dst: t,
                    message: format!(
                        "provider returned triplet stamped ({}, {})",
                        step.src_frame, step.dst_frame
                    ),
                });
            }
            if step.width() != self.width || step.height() != self.height {
                return Err(Error::Provider {
                    src: s,
                    dst: t,
                    message: format!(
                        "provider grid {}x{} does not match tracker {}x{}",
                        step.width(),
                        step.height(),
                        self.width,
                        self.height
                    ),
                });
            }
            candidates.push(chain(&prev, &step)?);
        }

        let index_map = select_best(&candidates, self.theta_o)?;
        let result = Arc::new(compose_result(&candidates, &index_map)?);

        self.memory.insert(t, Arc::clone(&result));
        self.current_frame = t;

        // Results older than the largest integer delta are never consulted
        // again; frame 0 is reconstructible and may be evicted too.
        let max_step = self.delta_set.max_step().unwrap_or(0) as usize;
        let keep_from = (t + 1).saturating_sub(max_step);
        self.memory.retain(|&k, _| k == t || k >= keep_from);

        Ok((result, index_map))
    }
}

/// Runs the tracker over `num_frames` frames and collects every result,
/// starting with the identity triplet for the reference frame.
///
/// `Backward` remaps frame `i` to `num_frames - 1 - i` inside the provider,
/// so the reference is the last frame of the range and results come out in
/// engine order (entry `e` corresponds to real frame `num_frames - 1 - e`).
pub fn track_sequence(
    provider: &dyn FlowProvider,
    width: usize,
    height: usize,
    num_frames: usize,
    delta_set: &DeltaSet,
    theta_o: f32,
    direction: Direction,
) -> Result<Vec<Arc<FouTriplet>>> {
    if num_frames == 0 {
        return Err(Error::FrameOutOfRange {
            frame: 0,
            num_frames: 0,
        });
    }
    match direction {
        Direction::Forward => {
            track_increasing(provider, width, height, num_frames, delta_set, theta_o)
        }
        Direction::Backward => {
            let reversed = ReversedProvider::new(provider, num_frames - 1);
            track_increasing(&reversed, width, height, num_frames, delta_set, theta_o)
        }
    }
}

fn track_increasing(
    provider: &dyn FlowProvider,
    width: usize,
    height: usize,
    num_frames: usize,
    delta_set: &DeltaSet,
    theta_o: f32,
) -> Result<Vec<Arc<FouTriplet>>> {
    let mut tracker = Tracker::init(width, height, delta_set.clone(), theta_o)?;
    let mut results = Vec::with_capacity(num_frames);
    results.push(tracker.memorized(0)?);
    for _ in 1..num_frames {
        results.push(tracker.step(provider)?);
    }
    Ok(results)
}

/// Converts dense results into per-query tracklets by bilinear interpolation
/// of the flow and occlusion maps at the query position. `results[t]` must be
/// the result for frame `t` of the tracked sequence.
pub fn extract_tracklets(
    results: &[Arc<FouTriplet>],
    queries: &QuerySet,
    theta_o: f32,
) -> Result<Vec<Tracklet>> {
    let first = results.first().ok_or(Error::ResultSequence {
        reason: "empty result list".into(),
    })?;
    let (w, h) = (first.width(), first.height());
    if queries.width() != w || queries.height() != h {
        return Err(Error::GridMismatch(w, h, queries.width(), queries.height()));
    }
    for (t, r) in results.iter().enumerate() {
        if r.dst_frame != t {
            return Err(Error::ResultSequence {
                reason: format!("entry {t} is stamped for frame {}", r.dst_frame),
            });
        }
    }

    let mut tracklets: Vec<Tracklet> = queries
        .points()
        .iter()
        .map(|&q| Tracklet {
            query: q,
            entries: Vec::with_capacity(results.len()),
        })
        .collect();

    for r in results {
        for tracklet in tracklets.iter_mut() {
            let q = tracklet.query;
            let displacement = sample_flow(&r.flow, q)?;
            let score = sample_scalar(&r.occlusion, q)?;
            tracklet.entries.push(TrackletEntry {
                position: q + displacement,
                occlusion_score: score,
                occluded: score > theta_o,
            });
        }
    }
    Ok(tracklets)
}
