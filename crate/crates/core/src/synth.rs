//! Layered synthetic scenes with analytic motion.
//!
//! A scene is an ordered stack of layers, background first; each layer owns a
//! support region in reference-frame coordinates and a per-frame affine
//! transform (identity at frame 0). Because the motion is affine and known in
//! closed form, the flow, occlusion and round-trip consistency between any
//! two frames are exact, which makes the scene an oracle for the tracking
//! pipeline. A pixel belongs to a layer when its center falls inside the
//! support region; later layers occlude earlier ones.
//!
//! The noise model corrupts oracle triplets the way an imperfect flow
//! estimator would: per-component Gaussian noise whose scale grows with the
//! frame gap, occasional gross errors, occlusion flips, and an emitted
//! uncertainty equal to the analytic per-component variance of that mixture,
//! so the uncertainty channel is calibrated by construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_key, Stream};
use crate::types::{FlowField, FouTriplet, ScalarMap, Vec2};

/// 2D affine transform: `x' = m * x + t`, stored in f64.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine2 {
    /// Row-major linear part `[[a, b], [c, d]]`.
    pub m: [[f64; 2]; 2],
    pub t: [f64; 2],
}

impl Affine2 {
    pub const IDENTITY: Affine2 = Affine2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
        t: [0.0, 0.0],
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64, tx: f64, ty: f64) -> Self {
        Affine2 {
            m: [[a, b], [c, d]],
            t: [tx, ty],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Affine2::new(1.0, 0.0, 0.0, 1.0, tx, ty)
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1] + self.t[0],
            self.m[1][0] * p[0] + self.m[1][1] * p[1] + self.t[1],
        ]
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Option<Affine2> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = [
            [self.m[1][1] / det, -self.m[0][1] / det],
            [-self.m[1][0] / det, self.m[0][0] / det],
        ];
        Some(Affine2 {
            m: inv,
            t: [
                -(inv[0][0] * self.t[0] + inv[0][1] * self.t[1]),
                -(inv[1][0] * self.t[0] + inv[1][1] * self.t[1]),
            ],
        })
    }

    fn is_identity(&self) -> bool {
        *self == Affine2::IDENTITY
    }
}

/// Support region of a layer, in reference-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disc { cx: f64, cy: f64, radius: f64 },
}

impl Region {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            Region::Rect { x0, y0, x1, y1 } => p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1,
            Region::Disc { cx, cy, radius } => {
                let dx = p[0] - cx;
                let dy = p[1] - cy;
                dx * dx + dy * dy <= radius * radius
            }
        }
    }
}

/// Parametric motion, expanded to one affine transform per frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Motion {
    Static,
    /// Constant translation per frame.
    Velocity {
        vx: f64,
        vy: f64,
    },
    /// Rotation and exponential scaling about an anchor plus translation.
    Similarity {
        anchor: [f64; 2],
        angular_velocity: f64,
        scale_rate: f64,
        vx: f64,
        vy: f64,
    },
    /// Explicit per-frame transforms `[a, b, c, d, tx, ty]`.
    Frames(Vec<Affine2>),
}

impl Motion {
    pub fn expand(&self, num_frames: usize) -> Result<Vec<Affine2>> {
        match self {
            Motion::Static => Ok(vec![Affine2::IDENTITY; num_frames]),
            Motion::Velocity { vx, vy } => Ok((0..num_frames)
                .map(|t| Affine2::translation(*vx * t as f64, *vy * t as f64))
                .collect()),
            Motion::Similarity {
                anchor,
                angular_velocity,
                scale_rate,
                vx,
                vy,
            } => {
                if *scale_rate <= 0.0 {
                    return Err(Error::Scene {
                        reason: format!("similarity scale_rate must be positive, got {scale_rate}"),
                    });
                }
                Ok((0..num_frames)
                    .map(|t| {
                        let tf = t as f64;
                        let s = scale_rate.powf(tf);
                        let (sin, cos) = (angular_velocity * tf).sin_cos();
                        let m = [[s * cos, -s * sin], [s * sin, s * cos]];
                        // Anchor stays fixed under the linear part.
                        let ax = anchor[0] - (m[0][0] * anchor[0] + m[0][1] * anchor[1]);
                        let ay = anchor[1] - (m[1][0] * anchor[0] + m[1][1] * anchor[1]);
                        Affine2 {
                            m,
                            t: [ax + vx * tf, ay + vy * tf],
                        }
                    })
                    .collect())
            }
            Motion::Frames(frames) => {
                if frames.len() != num_frames {
                    return Err(Error::Scene {
                        reason: format!(
                            "explicit motion lists {} frames, scene has {num_frames}",
                            frames.len()
                        ),
                    });
                }
                Ok(frames.clone())
            }
        }
    }
}

/// One scene layer: support region plus its expanded per-frame transforms.
#[derive(Debug, Clone)]
pub struct Layer {
    pub region: Region,
    transforms: Vec<Affine2>,
    inverses: Vec<Affine2>,
}

impl Layer {
    pub fn new(region: Region, transforms: Vec<Affine2>) -> Result<Self> {
        if transforms.is_empty() {
            return Err(Error::Scene {
                reason: "layer has no transforms".into(),
            });
        }
        if !transforms[0].is_identity() {
            return Err(Error::Scene {
                reason: "layer transform at frame 0 is not the identity".into(),
            });
        }
        let mut inverses = Vec::with_capacity(transforms.len());
        for (t, tf) in transforms.iter().enumerate() {
            match tf.inverse() {
                Some(inv) => inverses.push(inv),
                None => {
                    return Err(Error::Scene {
                        reason: format!("layer transform at frame {t} is singular"),
                    })
                }
            }
        }
        Ok(Layer {
            region,
            transforms,
            inverses,
        })
    }

    pub fn from_motion(region: Region, motion: &Motion, num_frames: usize) -> Result<Self> {
        Layer::new(region, motion.expand(num_frames)?)
    }

    pub fn transform(&self, frame: usize) -> &Affine2 {
        &self.transforms[frame]
    }

    pub fn inverse(&self, frame: usize) -> &Affine2 {
        &self.inverses[frame]
    }
}

/// Layered scene with exact per-pair flow and occlusion.
#[derive(Debug, Clone)]
pub struct SceneModel {
    width: usize,
    height: usize,
    num_frames: usize,
    layers: Vec<Layer>,
}

impl SceneModel {
    pub fn new(width: usize, height: usize, num_frames: usize, layers: Vec<Layer>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if num_frames == 0 {
            return Err(Error::Scene {
                reason: "scene needs at least one frame".into(),
            });
        }
        if layers.is_empty() {
            return Err(Error::Scene {
                reason: "scene has no layers".into(),
            });
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.transforms.len() != num_frames {
                return Err(Error::Scene {
                    reason: format!(
                        "layer {i} has {} transforms, scene has {num_frames} frames",
                        layer.transforms.len()
                    ),
                });
            }
        }
        Ok(SceneModel {
            width,
            height,
            num_frames,
            layers,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    fn check_frame(&self, frame: usize) -> Result<()> {
        if frame >= self.num_frames {
            return Err(Error::FrameOutOfRange {
                frame,
                num_frames: self.num_frames,
            });
        }
        Ok(())
    }

    fn in_view(&self, p: [f64; 2]) -> bool {
        p[0] >= 0.0
            && p[1] >= 0.0
            && p[0] <= (self.width - 1) as f64
            && p[1] <= (self.height - 1) as f64
    }

    /// Topmost layer covering position `p` at `frame`, if any.
    fn layer_at(&self, p: [f64; 2], frame: usize) -> Option<usize> {
        (0..self.layers.len()).rev().find(|&i| {
            let layer = &self.layers[i];
            layer.region.contains(layer.inverse(frame).apply(p))
        })
    }

    /// Is the material point of layer `i` at position `q` hidden at `frame`
    /// by some layer above it, or out of view?
    fn hidden(&self, i: usize, q: [f64; 2], frame: usize) -> bool {
        if !self.in_view(q) {
            return true;
        }
        self.layers[i + 1..]
            .iter()
            .any(|above| above.region.contains(above.inverse(frame).apply(q)))
    }

    /// Exact flow, occlusion, and zero uncertainty from frame `a` to `b`.
    ///
    /// Per pixel of frame `a`: the topmost covering layer is identified via
    /// inverse transforms, its reference pre-image is pushed through the
    /// frame-`b` transform, and the pixel is marked occluded when a later
    /// layer covers the target position or it leaves the view. Pixels covered
    /// by no layer get zero flow and occlusion 1.
    pub fn exact_flow(&self, a: usize, b: usize) -> Result<FouTriplet> {
        self.check_frame(a)?;
        self.check_frame(b)?;
        let (w, h) = (self.width, self.height);
        let n = w * h;
        let mut flow = vec![Vec2::ZERO; n];
        let mut occ = vec![0.0f32; n];

        flow.par_chunks_mut(w)
            .zip(occ.par_chunks_mut(w))
            .enumerate()
            .for_each(|(y, (flow_row, occ_row))| {
                for x in 0..w {
                    let p = [x as f64, y as f64];
                    match self.layer_at(p, a) {
                        Some(i) => {
                            let layer = &self.layers[i];
                            let reference = layer.inverse(a).apply(p);
                            let q = layer.transform(b).apply(reference);
                            flow_row[x] = Vec2::new((q[0] - p[0]) as f32, (q[1] - p[1]) as f32);
                            occ_row[x] = if self.hidden(i, q, b) { 1.0 } else { 0.0 };
                        }
                        None => {
                            flow_row[x] = Vec2::ZERO;
                            occ_row[x] = 1.0;
                        }
                    }
                }
            });

        FouTriplet::new(
            FlowField::new(w, h, flow)?,
            ScalarMap::new(w, h, occ)?,
            ScalarMap::zeros(w, h)?,
            a,
            b,
        )
    }

    /// Position and visibility at `frame` of the material point sitting at
    /// reference position `p` in frame 0. Mirrors `exact_flow(0, frame)`.
    pub fn point_state(&self, p: Vec2, frame: usize) -> Result<(Vec2, bool)> {
        self.check_frame(frame)?;
        let pf = [p.x as f64, p.y as f64];
        match self.layer_at(pf, 0) {
            Some(i) => {
                let layer = &self.layers[i];
                let reference = layer.inverse(0).apply(pf);
                let q = layer.transform(frame).apply(reference);
                let visible = !self.hidden(i, q, frame);
                Ok((Vec2::new(q[0] as f32, q[1] as f32), visible))
            }
            None => Ok((p, false)),
        }
    }

    /// Samples `count` distinct integer-grid query points, deterministically
    /// for a given seed. Integer positions sample result maps exactly, which
    /// keeps synthetic benchmarks free of interpolation edge cases.
    pub fn sample_query_points(&self, count: usize, seed: u64) -> Vec<Vec2> {
        let mut stream = Stream::new(derive_key(&[seed, 0x71]));
        let mut seen = std::collections::BTreeSet::new();
        let mut points = Vec::with_capacity(count);
        let cells = self.width * self.height;
        let target = count.min(cells);
        while points.len() < target {
            let x = (stream.next_u64() % self.width as u64) as usize;
            let y = (stream.next_u64() % self.height as u64) as usize;
            if seen.insert((x, y)) {
                points.push(Vec2::new(x as f32, y as f32));
            }
        }
        points
    }
}

// --- scene file schema -----------------------------------------------------

pub const SCENE_FILE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct SceneFile {
    version: u32,
    width: usize,
    height: usize,
    num_frames: usize,
    layers: Vec<LayerSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    region: RegionSpec,
    motion: MotionSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
enum RegionSpec {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disc { cx: f64, cy: f64, radius: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MotionSpec {
    Static,
    Velocity {
        vx: f64,
        vy: f64,
    },
    Similarity {
        anchor: [f64; 2],
        angular_velocity: f64,
        scale_rate: f64,
        #[serde(default)]
        vx: f64,
        #[serde(default)]
        vy: f64,
    },
    Frames {
        frames: Vec<[f64; 6]>,
    },
}

impl From<&Region> for RegionSpec {
    fn from(r: &Region) -> Self {
        match *r {
            Region::Rect { x0, y0, x1, y1 } => RegionSpec::Rect { x0, y0, x1, y1 },
            Region::Disc { cx, cy, radius } => RegionSpec::Disc { cx, cy, radius },
        }
    }
}

impl From<&RegionSpec> for Region {
    fn from(r: &RegionSpec) -> Self {
        match *r {
            RegionSpec::Rect { x0, y0, x1, y1 } => Region::Rect { x0, y0, x1, y1 },
            RegionSpec::Disc { cx, cy, radius } => Region::Disc { cx, cy, radius },
        }
    }
}

impl SceneModel {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SceneFile = toml::from_str(text).map_err(|e| Error::Scene {
            reason: format!("cannot parse scene file: {e}"),
        })?;
        if file.version != SCENE_FILE_VERSION {
            return Err(Error::Scene {
                reason: format!(
                    "unsupported scene file version {} (expected {SCENE_FILE_VERSION})",
                    file.version
                ),
            });
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for spec in &file.layers {
            let motion = match &spec.motion {
                MotionSpec::Static => Motion::Static,
                MotionSpec::Velocity { vx, vy } => Motion::Velocity { vx: *vx, vy: *vy },
                MotionSpec::Similarity {
                    anchor,
                    angular_velocity,
                    scale_rate,
                    vx,
                    vy,
                } => Motion::Similarity {
                    anchor: *anchor,
                    angular_velocity: *angular_velocity,
                    scale_rate: *scale_rate,
                    vx: *vx,
                    vy: *vy,
                },
                MotionSpec::Frames { frames } => Motion::Frames(
                    frames
                        .iter()
                        .map(|f| Affine2::new(f[0], f[1], f[2], f[3], f[4], f[5]))
                        .collect(),
                ),
            };
            layers.push(Layer::from_motion(
                (&spec.region).into(),
                &motion,
                file.num_frames,
            )?);
        }
        SceneModel::new(file.width, file.height, file.num_frames, layers)
    }

    /// Serializes the scene with explicit per-frame transforms. Parametric
    /// motions are expanded; the round trip preserves semantics, not the
    /// original parameterization.
    pub fn to_toml_string(&self) -> Result<String> {
        let file = SceneFile {
            version: SCENE_FILE_VERSION,
            width: self.width,
            height: self.height,
            num_frames: self.num_frames,
            layers: self
                .layers
                .iter()
                .map(|l| LayerSpec {
                    name: None,
                    region: (&l.region).into(),
                    motion: MotionSpec::Frames {
                        frames: l
                            .transforms
                            .iter()
                            .map(|a| [a.m[0][0], a.m[0][1], a.m[1][0], a.m[1][1], a.t[0], a.t[1]])
                            .collect(),
                    },
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::Scene {
            reason: format!("cannot serialize scene: {e}"),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SceneModel::from_toml_str(&text)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }
}

// --- noise model -------------------------------------------------------------

/// Degradation model for synthetic flow: Gaussian noise growing with the
/// frame gap, sparse gross errors, and occlusion flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Gaussian std at gap 1, pixels: `sigma(gap) = sigma_base * gap^sigma_exponent`.
    pub sigma_base: f64,
    /// Gap exponent; 0.5 makes the variance additive along chains.
    pub sigma_exponent: f64,
    /// Probability that a pixel's flow is replaced by a gross error.
    pub gross_probability: f64,
    /// Euclidean magnitude of a gross error, pixels.
    pub gross_magnitude: f64,
    /// Probability of flipping a pixel's occlusion score.
    pub occlusion_flip_probability: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// A disabled noise model: corrupt becomes the identity.
    pub fn none(seed: u64) -> Self {
        NoiseModel {
            sigma_base: 0.0,
            sigma_exponent: 0.5,
            gross_probability: 0.0,
            gross_magnitude: 0.0,
            occlusion_flip_probability: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("gross_probability", self.gross_probability),
            (
                "occlusion_flip_probability",
                self.occlusion_flip_probability,
            ),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Noise {
                    reason: format!("{name} = {p} outside [0, 1]"),
                });
            }
        }
        if self.sigma_base < 0.0 || self.sigma_exponent < 0.0 {
            return Err(Error::Noise {
                reason: "sigma must be nonnegative and nondecreasing in gap".into(),
            });
        }
        if self.gross_magnitude < 0.0 {
            return Err(Error::Noise {
                reason: "gross_magnitude must be nonnegative".into(),
            });
        }
        Ok(())
    }

    pub fn sigma(&self, gap: usize) -> f64 {
        if gap == 0 {
            return 0.0;
        }
        self.sigma_base * (gap as f64).powf(self.sigma_exponent)
    }

    /// Analytic per-component variance of the corruption mixture: Gaussian
    /// with probability `1 - eps`, gross error of fixed magnitude (random
    /// direction, per-component variance `m^2/2`) with probability `eps`.
    pub fn emitted_variance(&self, gap: usize) -> f64 {
        let sigma = self.sigma(gap);
        (1.0 - self.gross_probability) * sigma * sigma
            + self.gross_probability * self.gross_magnitude * self.gross_magnitude / 2.0
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let model: NoiseModel = toml::from_str(text).map_err(|e| Error::Noise {
            reason: format!("cannot parse noise file: {e}"),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("noise model serializes")
    }
}

/// Applies the noise model to a triplet. Deterministic for a given seed and
/// frame pair: every pixel draws from its own counter-based stream, so the
/// output does not depend on evaluation order.
pub fn corrupt(fou: &FouTriplet, noise: &NoiseModel) -> FouTriplet {
    let gap = fou.dst_frame.abs_diff(fou.src_frame);
    let sigma = noise.sigma(gap);
    let emitted = noise.emitted_variance(gap) as f32;
    let (w, h) = (fou.width(), fou.height());
    let n = w * h;
    let pair_key = derive_key(&[noise.seed, fou.src_frame as u64, fou.dst_frame as u64]);

    let mut flow = fou.flow.data().to_vec();
    let mut occ = fou.occlusion.data().to_vec();
    let unc = vec![emitted; n];

    flow.par_iter_mut()
        .zip(occ.par_iter_mut())
        .enumerate()
        .for_each(|(i, (f, o))| {
            let mut stream = Stream::new(derive_key(&[pair_key, i as u64]));
            // Fixed draw order keeps streams aligned across branches.
            let u_gross = stream.next_f64();
            let (g1, g2) = stream.next_gaussian_pair();
            let u_angle = stream.next_f64();
            let u_flip = stream.next_f64();

            if u_gross < noise.gross_probability {
                let phi = std::f64::consts::TAU * u_angle;
                f.x += (noise.gross_magnitude * phi.cos()) as f32;
                f.y += (noise.gross_magnitude * phi.sin()) as f32;
            } else {
                f.x += (sigma * g1) as f32;
                f.y += (sigma * g2) as f32;
            }
            if u_flip < noise.occlusion_flip_probability {
                *o = 1.0 - *o;
            }
        });

    FouTriplet::new(
        FlowField::new(w, h, flow).expect("corrupted flow stays finite"),
        ScalarMap::new(w, h, occ).expect("flipped occlusion stays in range"),
        ScalarMap::new(w, h, unc).expect("emitted variance is finite"),
        fou.src_frame,
        fou.dst_frame,
    )
    .expect("corruption preserves triplet invariants")
}

/// Negative log-likelihood style uncertainty loss for one flow prediction:
/// `huber(|pred - gt|) / (2 sigma2) + log(sigma2) / 2`.
pub fn uncertainty_loss(pred: Vec2, gt: Vec2, sigma2: f64, huber_delta: f64) -> Result<f64> {
    if sigma2 <= 0.0 || !sigma2.is_finite() {
        return Err(Error::SigmaRange { value: sigma2 });
    }
    if huber_delta <= 0.0 || !huber_delta.is_finite() {
        return Err(Error::Noise {
            reason: format!("huber delta must be positive, got {huber_delta}"),
        });
    }
    let r = (pred - gt).norm();
    let huber = if r <= huber_delta {
        0.5 * r * r
    } else {
        huber_delta * (r - 0.5 * huber_delta)
    };
    Ok(huber / (2.0 * sigma2) + 0.5 * sigma2.ln())
}
