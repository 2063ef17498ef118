//! Tracking-quality metrics and the benchmark evaluation protocol.
//!
//! Three headline numbers: occlusion accuracy (OA) — the fraction of frames
//! with a correct visibility prediction; position accuracy (`delta_avg`) —
//! the fraction of ground-truth-visible points within a pixel threshold,
//! averaged over thresholds {1, 2, 4, 8, 16}; and Average Jaccard (AJ), the
//! threshold-averaged TP / (TP + FP + FN) combining both. PCK-T measures the
//! fraction of points within `0.2 * sqrt(mask area)`.
//!
//! Two protocol modes: `first` initializes each point at its first visible
//! frame and evaluates the following frames; `strided` initializes at frames
//! 0, 5, 10, ... where the point is visible and evaluates both the preceding
//! frames (backward run) and the following ones (forward run). Coordinates
//! can be rescaled by independent x/y factors before thresholding, matching
//! benchmarks that evaluate at a fixed resolution. All accumulation is f64
//! with a deterministic reduction order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tracker::{
    extract_tracklets, track_sequence, DeltaSet, Direction, FlowProvider, ReversedProvider,
    ShiftedProvider,
};
use crate::types::{QuerySet, Tracklet, Vec2};

/// Pixel thresholds shared by position accuracy and Average Jaccard.
pub const THRESHOLDS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

/// Initialization stride of the `strided` evaluation mode.
pub const STRIDE: usize = 5;

/// Annotated trajectory of one ground-truth point at evaluation resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrack {
    pub id: u32,
    pub positions: Vec<Vec2>,
    pub visible: Vec<bool>,
}

impl GroundTruthTrack {
    pub fn new(id: u32, positions: Vec<Vec2>, visible: Vec<bool>) -> Result<Self> {
        if positions.len() != visible.len() {
            return Err(Error::LengthMismatch {
                left: positions.len(),
                right: visible.len(),
                context: "ground-truth positions vs visibility",
            });
        }
        for (p, &v) in positions.iter().zip(&visible) {
            if v && !p.is_finite() {
                return Err(Error::NonFinite {
                    context: "visible ground-truth position",
                });
            }
        }
        Ok(GroundTruthTrack {
            id,
            positions,
            visible,
        })
    }

    pub fn first_visible_frame(&self) -> Option<usize> {
        self.visible.iter().position(|&v| v)
    }
}

fn check_len(left: usize, right: usize, context: &'static str) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch {
            left,
            right,
            context,
        });
    }
    Ok(())
}

/// Fraction of frames whose predicted occlusion flag matches the ground
/// truth (predicted-occluded equals not-visible).
pub fn occlusion_accuracy(pred_occluded: &[bool], gt_visible: &[bool]) -> Result<f64> {
    check_len(
        pred_occluded.len(),
        gt_visible.len(),
        "occlusion accuracy inputs",
    )?;
    if pred_occluded.is_empty() {
        return Err(Error::Evaluation {
            reason: "no frames to evaluate".into(),
        });
    }
    let correct = pred_occluded
        .iter()
        .zip(gt_visible)
        .filter(|(&o, &v)| o == !v)
        .count();
    Ok(correct as f64 / pred_occluded.len() as f64)
}

/// Position accuracy: mean over thresholds of the fraction of ground-truth
/// visible points with error below the threshold. `None` when no frame is
/// visible (undefined rather than zero).
pub fn position_accuracy(
    pred: &[Vec2],
    gt_positions: &[Vec2],
    gt_visible: &[bool],
) -> Result<Option<f64>> {
    check_len(pred.len(), gt_positions.len(), "position accuracy inputs")?;
    check_len(pred.len(), gt_visible.len(), "position accuracy inputs")?;
    let mut visible = 0u64;
    let mut within = [0u64; THRESHOLDS.len()];
    for i in 0..pred.len() {
        if !gt_visible[i] {
            continue;
        }
        visible += 1;
        let err = (pred[i] - gt_positions[i]).norm();
        for (k, &thr) in THRESHOLDS.iter().enumerate() {
            if err < thr {
                within[k] += 1;
            }
        }
    }
    if visible == 0 {
        return Ok(None);
    }
    let sum: f64 = within.iter().map(|&w| w as f64 / visible as f64).sum();
    Ok(Some(sum / THRESHOLDS.len() as f64))
}

/// Average Jaccard over the shared thresholds. Per frame and threshold:
/// TP when visible, predicted visible, and accurate; FP when predicted
/// visible but occluded or inaccurate; FN when visible but predicted
/// occluded or inaccurate (an inaccurate visible prediction counts as both
/// FP and FN). `None` when no frame contributes.
pub fn average_jaccard(
    pred: &[Vec2],
    pred_occluded: &[bool],
    gt_positions: &[Vec2],
    gt_visible: &[bool],
) -> Result<Option<f64>> {
    check_len(pred.len(), pred_occluded.len(), "average jaccard inputs")?;
    check_len(pred.len(), gt_positions.len(), "average jaccard inputs")?;
    check_len(pred.len(), gt_visible.len(), "average jaccard inputs")?;
    let mut acc = Accumulator::default();
    for i in 0..pred.len() {
        acc.add(pred[i], pred_occluded[i], gt_positions[i], gt_visible[i]);
    }
    Ok(acc.average_jaccard())
}

/// Fraction of points with error under `0.2 * sqrt(mask_area)`.
pub fn pck_t(pred: &[Vec2], gt_positions: &[Vec2], mask_area: f64) -> Result<f64> {
    check_len(pred.len(), gt_positions.len(), "pck-t inputs")?;
    if mask_area <= 0.0 || mask_area.is_nan() {
        return Err(Error::MaskArea { value: mask_area });
    }
    if pred.is_empty() {
        return Err(Error::Evaluation {
            reason: "no points to evaluate".into(),
        });
    }
    let threshold = 0.2 * mask_area.sqrt();
    let within = pred
        .iter()
        .zip(gt_positions)
        .filter(|(p, g)| (**p - **g).norm() < threshold)
        .count();
    Ok(within as f64 / pred.len() as f64)
}

// --- aggregation ---------------------------------------------------------------

#[derive(Debug, Default, Clone, Copy)]
struct ThresholdCounts {
    tp: u64,
    fp: u64,
    fn_: u64,
    within: u64,
}

/// Pooled counts over evaluated (point, frame) samples.
#[derive(Debug, Default, Clone)]
pub struct Accumulator {
    per_threshold: [ThresholdCounts; THRESHOLDS.len()],
    oa_correct: u64,
    samples: u64,
    visible_samples: u64,
}

impl Accumulator {
    pub fn add(&mut self, pred: Vec2, pred_occluded: bool, gt_position: Vec2, gt_visible: bool) {
        self.samples += 1;
        if pred_occluded == !gt_visible {
            self.oa_correct += 1;
        }
        let err = if gt_visible {
            (pred - gt_position).norm()
        } else {
            f64::INFINITY
        };
        if gt_visible {
            self.visible_samples += 1;
        }
        let pred_visible = !pred_occluded;
        for (k, &thr) in THRESHOLDS.iter().enumerate() {
            let within = gt_visible && err < thr;
            let c = &mut self.per_threshold[k];
            if within {
                c.within += 1;
            }
            if gt_visible && pred_visible && within {
                c.tp += 1;
            }
            if pred_visible && !(gt_visible && within) {
                c.fp += 1;
            }
            if gt_visible && !(pred_visible && within) {
                c.fn_ += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &Accumulator) {
        for (a, b) in self.per_threshold.iter_mut().zip(&other.per_threshold) {
            a.tp += b.tp;
            a.fp += b.fp;
            a.fn_ += b.fn_;
            a.within += b.within;
        }
        self.oa_correct += other.oa_correct;
        self.samples += other.samples;
        self.visible_samples += other.visible_samples;
    }

    fn average_jaccard(&self) -> Option<f64> {
        let mut sum = 0.0;
        for c in &self.per_threshold {
            let denom = c.tp + c.fp + c.fn_;
            if denom == 0 {
                return None;
            }
            sum += c.tp as f64 / denom as f64;
        }
        Some(sum / THRESHOLDS.len() as f64)
    }

    /// Builds the report from the pooled counts.
    pub fn finish(&self, points: usize) -> Result<EvalReport> {
        if self.samples == 0 {
            return Err(Error::Evaluation {
                reason: "no samples were evaluated".into(),
            });
        }
        let per_threshold: Vec<ThresholdStats> = THRESHOLDS
            .iter()
            .zip(&self.per_threshold)
            .map(|(&threshold, c)| {
                let denom = c.tp + c.fp + c.fn_;
                ThresholdStats {
                    threshold,
                    within_fraction: (self.visible_samples > 0)
                        .then(|| c.within as f64 / self.visible_samples as f64),
                    jaccard: (denom > 0).then(|| c.tp as f64 / denom as f64),
                    tp: c.tp,
                    fp: c.fp,
                    fn_count: c.fn_,
                    within: c.within,
                }
            })
            .collect();

        let delta_avg = if self.visible_samples > 0 {
            Some(
                per_threshold
                    .iter()
                    .map(|t| t.within_fraction.unwrap_or(0.0))
                    .sum::<f64>()
                    / THRESHOLDS.len() as f64,
            )
        } else {
            None
        };

        Ok(EvalReport {
            oa: self.oa_correct as f64 / self.samples as f64,
            delta_avg,
            aj: self.average_jaccard(),
            per_threshold,
            points,
            samples: self.samples,
            visible_samples: self.visible_samples,
        })
    }
}

/// Per-threshold breakdown inside an [`EvalReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdStats {
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jaccard: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    pub fn_count: u64,
    /// Raw count behind `within_fraction`, for pooling across runs.
    pub within: u64,
}

/// Aggregated evaluation result. The headline numbers are recomputable from
/// the per-threshold breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub oa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_avg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aj: Option<f64>,
    pub per_threshold: Vec<ThresholdStats>,
    pub points: usize,
    pub samples: u64,
    pub visible_samples: u64,
}

impl EvalReport {
    /// Aligned human-readable table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str("threshold    within   jaccard        tp        fp        fn\n");
        for t in &self.per_threshold {
            let within = t
                .within_fraction
                .map_or("      -".to_string(), |v| format!("{v:7.4}"));
            let jaccard = t
                .jaccard
                .map_or("      -".to_string(), |v| format!("{v:7.4}"));
            out.push_str(&format!(
                "{:9} {} {} {:9} {:9} {:9}\n",
                t.threshold, within, jaccard, t.tp, t.fp, t.fn_count
            ));
        }
        let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        out.push_str(&format!(
            "OA {:.4}   delta_avg {}   AJ {}   (points {}, samples {}, visible {})\n",
            self.oa,
            fmt_opt(self.delta_avg),
            fmt_opt(self.aj),
            self.points,
            self.samples,
            self.visible_samples
        ));
        out
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Evaluation {
            reason: format!("cannot serialize report: {e}"),
        })
    }
}

// --- protocol -------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    First,
    Strided,
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(EvalMode::First),
            "strided" => Ok(EvalMode::Strided),
            other => Err(Error::Evaluation {
                reason: format!("unknown mode {other:?} (expected first or strided)"),
            }),
        }
    }
}

/// Coordinate rescale applied to tracker outputs before metric computation:
/// predictions tracked at `from` resolution are mapped into the ground
/// truth's `to` resolution by independent x/y factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescale {
    pub from: (usize, usize),
    pub to: (usize, usize),
}

impl Rescale {
    pub fn factors(&self) -> (f64, f64) {
        (
            self.to.0 as f64 / self.from.0 as f64,
            self.to.1 as f64 / self.from.1 as f64,
        )
    }
}

/// Anything that can produce tracklets from a chosen initialization frame.
/// Entry `e` of a returned tracklet corresponds to real frame `init + e`
/// (forward) or `init - e` (backward).
pub trait TrackSource {
    fn num_frames(&self) -> usize;
    fn grid_size(&self) -> (usize, usize);
    fn track(
        &self,
        init_frame: usize,
        direction: Direction,
        queries: &QuerySet,
    ) -> Result<Vec<Tracklet>>;
}

/// Track source running the tracking engine over a flow provider.
pub struct EngineTrackSource<'a> {
    pub provider: &'a dyn FlowProvider,
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub delta_set: DeltaSet,
    pub theta_o: f32,
}

impl TrackSource for EngineTrackSource<'_> {
    fn num_frames(&self) -> usize {
        self.num_frames
    }

    fn grid_size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn track(
        &self,
        init_frame: usize,
        direction: Direction,
        queries: &QuerySet,
    ) -> Result<Vec<Tracklet>> {
        if init_frame >= self.num_frames {
            return Err(Error::FrameOutOfRange {
                frame: init_frame,
                num_frames: self.num_frames,
            });
        }
        let results = match direction {
            Direction::Forward => {
                let shifted = ShiftedProvider::new(self.provider, init_frame);
                track_sequence(
                    &shifted,
                    self.width,
                    self.height,
                    self.num_frames - init_frame,
                    &self.delta_set,
                    self.theta_o,
                    Direction::Forward,
                )?
            }
            Direction::Backward => {
                // Engine frame e maps to real frame init - e.
                let reversed = ReversedProvider::new(self.provider, init_frame);
                track_sequence(
                    &reversed,
                    self.width,
                    self.height,
                    init_frame + 1,
                    &self.delta_set,
                    self.theta_o,
                    Direction::Forward,
                )?
            }
        };
        extract_tracklets(&results, queries, self.theta_o)
    }
}

/// Runs the evaluation protocol against ground-truth tracks.
///
/// `first` mode: each point is initialized at its first visible frame, at its
/// annotated position there, and evaluated on the following frames only.
/// `strided` mode: initializations at frames 0, 5, 10, ... where the point is
/// visible; the tracker runs forward and backward and both sides are pooled.
/// The initialization frame itself is not evaluated in either mode.
pub fn evaluate(
    source: &dyn TrackSource,
    gt_tracks: &[GroundTruthTrack],
    mode: EvalMode,
    rescale: Option<Rescale>,
) -> Result<EvalReport> {
    let num_frames = source.num_frames();
    let (grid_w, grid_h) = source.grid_size();
    if gt_tracks.is_empty() {
        return Err(Error::Evaluation {
            reason: "no ground-truth tracks".into(),
        });
    }
    for t in gt_tracks {
        check_len(t.positions.len(), num_frames, "track length vs sequence")?;
    }
    if let Some(r) = rescale {
        if r.from != (grid_w, grid_h) {
            return Err(Error::Evaluation {
                reason: format!(
                    "rescale source {}x{} does not match tracking grid {grid_w}x{grid_h}",
                    r.from.0, r.from.1
                ),
            });
        }
    }
    let (sx, sy) = rescale.map_or((1.0, 1.0), |r| r.factors());

    // Group points by initialization frame.
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    match mode {
        EvalMode::First => {
            let mut by_init: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
            for (i, t) in gt_tracks.iter().enumerate() {
                if let Some(init) = t.first_visible_frame() {
                    by_init.entry(init).or_default().push(i);
                }
            }
            groups.extend(by_init);
        }
        EvalMode::Strided => {
            for init in (0..num_frames).step_by(STRIDE) {
                let pts: Vec<usize> = gt_tracks
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.visible[init])
                    .map(|(i, _)| i)
                    .collect();
                if !pts.is_empty() {
                    groups.push((init, pts));
                }
            }
        }
    }
    if groups.is_empty() {
        return Err(Error::Evaluation {
            reason: "no visible initialization frames".into(),
        });
    }

    let mut acc = Accumulator::default();
    for (init, points) in &groups {
        // Ground truth lives at evaluation resolution; queries go to the
        // tracking grid through the inverse scale, clamped to stay inside.
        let queries = QuerySet::new(
            grid_w,
            grid_h,
            points
                .iter()
                .map(|&i| {
                    let p = gt_tracks[i].positions[*init];
                    Vec2::new(
                        ((p.x as f64 / sx) as f32).clamp(0.0, (grid_w - 1) as f32),
                        ((p.y as f64 / sy) as f32).clamp(0.0, (grid_h - 1) as f32),
                    )
                })
                .collect(),
        )?;

        let mut runs = vec![Direction::Forward];
        if mode == EvalMode::Strided {
            if *init + 1 >= num_frames {
                runs = vec![Direction::Backward];
            } else if *init > 0 {
                runs.push(Direction::Backward);
            }
        }
        for direction in runs {
            let expected_len = match direction {
                Direction::Forward => num_frames - init,
                Direction::Backward => init + 1,
            };
            if expected_len < 2 {
                continue;
            }
            let tracklets = source.track(*init, direction, &queries)?;
            check_len(tracklets.len(), points.len(), "tracklets vs queries")?;
            for (tracklet, &point_idx) in tracklets.iter().zip(points) {
                check_len(tracklet.entries.len(), expected_len, "tracklet length")?;
                let gt = &gt_tracks[point_idx];
                for (e, entry) in tracklet.entries.iter().enumerate().skip(1) {
                    let real = match direction {
                        Direction::Forward => init + e,
                        Direction::Backward => init - e,
                    };
                    let pred = Vec2::new(
                        (entry.position.x as f64 * sx) as f32,
                        (entry.position.y as f64 * sy) as f32,
                    );
                    acc.add(pred, entry.occluded, gt.positions[real], gt.visible[real]);
                }
            }
        }
    }
    acc.finish(gt_tracks.len())
}

// --- file schemas -----------------------------------------------------------------

pub const TRACKS_FILE_VERSION: u32 = 1;

/// Ground-truth track set bound to its evaluation resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GtTrackSet {
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub tracks: Vec<GroundTruthTrack>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtTrackFile {
    version: u32,
    width: usize,
    height: usize,
    num_frames: usize,
    tracks: Vec<GtTrackEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtTrackEntry {
    id: u32,
    x: Vec<f32>,
    y: Vec<f32>,
    visible: Vec<bool>,
}

impl GtTrackSet {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: GtTrackFile = toml::from_str(text).map_err(|e| Error::TrackFile {
            reason: format!("cannot parse ground-truth tracks: {e}"),
        })?;
        if file.version != TRACKS_FILE_VERSION {
            return Err(Error::TrackFile {
                reason: format!("unsupported version {}", file.version),
            });
        }
        let mut tracks = Vec::with_capacity(file.tracks.len());
        for t in file.tracks {
            check_len(t.x.len(), file.num_frames, "gt track x length")?;
            check_len(t.y.len(), file.num_frames, "gt track y length")?;
            let positions =
                t.x.iter()
                    .zip(&t.y)
                    .map(|(&x, &y)| Vec2::new(x, y))
                    .collect();
            tracks.push(GroundTruthTrack::new(t.id, positions, t.visible)?);
        }
        Ok(GtTrackSet {
            width: file.width,
            height: file.height,
            num_frames: file.num_frames,
            tracks,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let file = GtTrackFile {
            version: TRACKS_FILE_VERSION,
            width: self.width,
            height: self.height,
            num_frames: self.num_frames,
            tracks: self
                .tracks
                .iter()
                .map(|t| GtTrackEntry {
                    id: t.id,
                    x: t.positions.iter().map(|p| p.x).collect(),
                    y: t.positions.iter().map(|p| p.y).collect(),
                    visible: t.visible.clone(),
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::TrackFile {
            reason: format!("cannot serialize ground-truth tracks: {e}"),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GtTrackSet::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }
}

/// One serialized tracker run: tracklets plus the run's provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackletFile {
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub init_frame: usize,
    pub direction: Direction,
    pub theta_o: f32,
    pub deltas: String,
    pub tracklets: Vec<Tracklet>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrackletFileWire {
    version: u32,
    width: usize,
    height: usize,
    num_frames: usize,
    init_frame: usize,
    direction: String,
    theta_o: f32,
    deltas: String,
    #[serde(default)]
    tracklets: Vec<TrackletWire>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrackletWire {
    query: [f32; 2],
    x: Vec<f32>,
    y: Vec<f32>,
    score: Vec<f32>,
    occluded: Vec<bool>,
}

impl TrackletFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: TrackletFileWire = toml::from_str(text).map_err(|e| Error::TrackFile {
            reason: format!("cannot parse tracklet file: {e}"),
        })?;
        if file.version != TRACKS_FILE_VERSION {
            return Err(Error::TrackFile {
                reason: format!("unsupported version {}", file.version),
            });
        }
        let mut tracklets = Vec::with_capacity(file.tracklets.len());
        for t in file.tracklets {
            let len = t.x.len();
            check_len(t.y.len(), len, "tracklet y length")?;
            check_len(t.score.len(), len, "tracklet score length")?;
            check_len(t.occluded.len(), len, "tracklet occlusion length")?;
            let entries = (0..len)
                .map(|i| crate::types::TrackletEntry {
                    position: Vec2::new(t.x[i], t.y[i]),
                    occlusion_score: t.score[i],
                    occluded: t.occluded[i],
                })
                .collect();
            tracklets.push(Tracklet {
                query: Vec2::new(t.query[0], t.query[1]),
                entries,
            });
        }
        Ok(TrackletFile {
            width: file.width,
            height: file.height,
            num_frames: file.num_frames,
            init_frame: file.init_frame,
            direction: file.direction.parse()?,
            theta_o: file.theta_o,
            deltas: file.deltas,
            tracklets,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let file = TrackletFileWire {
            version: TRACKS_FILE_VERSION,
            width: self.width,
            height: self.height,
            num_frames: self.num_frames,
            init_frame: self.init_frame,
            direction: self.direction.to_string(),
            theta_o: self.theta_o,
            deltas: self.deltas.clone(),
            tracklets: self
                .tracklets
                .iter()
                .map(|t| TrackletWire {
                    query: [t.query.x, t.query.y],
                    x: t.entries.iter().map(|e| e.position.x).collect(),
                    y: t.entries.iter().map(|e| e.position.y).collect(),
                    score: t.entries.iter().map(|e| e.occlusion_score).collect(),
                    occluded: t.entries.iter().map(|e| e.occluded).collect(),
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::TrackFile {
            reason: format!("cannot serialize tracklets: {e}"),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrackletFile::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }
}

/// Track source assembled from serialized runs; `track` looks up the run
/// matching the requested initialization and direction and errors when a
/// needed run or query is missing.
pub struct TrackletPool {
    width: usize,
    height: usize,
    num_frames: usize,
    runs: Vec<TrackletFile>,
}

impl TrackletPool {
    pub fn new(runs: Vec<TrackletFile>) -> Result<Self> {
        let first = runs.first().ok_or(Error::TrackFile {
            reason: "no tracklet files given".into(),
        })?;
        let (w, h, n) = (first.width, first.height, first.num_frames);
        for r in &runs {
            if r.width != w || r.height != h || r.num_frames != n {
                return Err(Error::TrackFile {
                    reason: "tracklet files disagree on dimensions or frame count".into(),
                });
            }
        }
        Ok(TrackletPool {
            width: w,
            height: h,
            num_frames: n,
            runs,
        })
    }
}

impl TrackSource for TrackletPool {
    fn num_frames(&self) -> usize {
        self.num_frames
    }

    fn grid_size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn track(
        &self,
        init_frame: usize,
        direction: Direction,
        queries: &QuerySet,
    ) -> Result<Vec<Tracklet>> {
        let run = self
            .runs
            .iter()
            .find(|r| r.init_frame == init_frame && r.direction == direction)
            .ok_or_else(|| Error::Evaluation {
                reason: format!(
                    "no tracklet file for init frame {init_frame}, direction {direction}"
                ),
            })?;
        queries
            .points()
            .iter()
            .map(|q| {
                run.tracklets
                    .iter()
                    .find(|t| (t.query.x - q.x).abs() <= 1e-3 && (t.query.y - q.y).abs() <= 1e-3)
                    .cloned()
                    .ok_or_else(|| Error::Evaluation {
                        reason: format!(
                            "no tracklet for query ({}, {}) in run init={init_frame} dir={direction}",
                            q.x, q.y
                        ),
                    })
            })
            .collect()
    }
}
