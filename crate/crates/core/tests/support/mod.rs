//! Shared helpers for the integration and acceptance suites: a per-point
//! scalar reference tracker and seeded scene generators. Not every test
//! target uses every helper.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use mft_core::rng::{derive_key, Stream};
use mft_core::synth::{Affine2, Layer, Motion, Region, SceneModel};
use mft_core::tracker::{Delta, DeltaSet, FlowProvider};
use mft_core::types::FouTriplet;

/// Per-pixel state of the scalar reference: accumulated flow, occlusion and
/// uncertainty from the reference frame.
#[derive(Debug, Clone, Copy)]
pub struct ScalarState {
    pub fx: f32,
    pub fy: f32,
    pub occ: f32,
    pub unc: f32,
}

/// Clamped bilinear lookup used by the scalar reference. The blend follows
/// the same fixed arithmetic as the engine so comparisons are meaningful at
/// tight tolerances: `wx1 = x - floor(x)` after clamping, then
/// `(v00*wx0 + v10*wx1)*wy0 + (v01*wx0 + v11*wx1)*wy1`.
fn bilinear(values: &dyn Fn(usize, usize) -> f32, w: usize, h: usize, x: f32, y: f32) -> f32 {
    let cx = x.clamp(0.0, (w - 1) as f32);
    let cy = y.clamp(0.0, (h - 1) as f32);
    let x0 = cx.floor();
    let y0 = cy.floor();
    let x0i = x0 as usize;
    let y0i = y0 as usize;
    let x1i = (x0i + 1).min(w - 1);
    let y1i = (y0i + 1).min(h - 1);
    let wx1 = cx - x0;
    let wy1 = cy - y0;
    let wx0 = 1.0 - wx1;
    let wy0 = 1.0 - wy1;
    let top = values(x0i, y0i) * wx0 + values(x1i, y0i) * wx1;
    let bottom = values(x0i, y1i) * wx0 + values(x1i, y1i) * wx1;
    top * wy0 + bottom * wy1
}

/// Tracks every grid pixel independently with plain scalar arithmetic,
/// following the chaining and selection rules directly: position lookup,
/// flow addition, occlusion maximum with out-of-view forcing, uncertainty
/// addition, then lowest-uncertainty-unoccluded selection with first-wins
/// fallback. Returns, per frame, the per-pixel states and winning candidate
/// indices. Shares only the provider with the engine under test.
pub struct ScalarReferenceTracker {
    width: usize,
    height: usize,
    deltas: Vec<Delta>,
    theta_o: f32,
    /// memory[frame][pixel]
    memory: HashMap<usize, Vec<ScalarState>>,
    current: usize,
}

impl ScalarReferenceTracker {
    pub fn new(width: usize, height: usize, delta_set: &DeltaSet, theta_o: f32) -> Self {
        let zeros = vec![
            ScalarState {
                fx: 0.0,
                fy: 0.0,
                occ: 0.0,
                unc: 0.0,
            };
            width * height
        ];
        let mut memory = HashMap::new();
        memory.insert(0, zeros);
        ScalarReferenceTracker {
            width,
            height,
            deltas: delta_set.deltas().to_vec(),
            theta_o,
            memory,
            current: 0,
        }
    }

    fn sources(&self, t: usize) -> Vec<usize> {
        let mut sources = Vec::new();
        for d in &self.deltas {
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

    pub fn step(&mut self, provider: &dyn FlowProvider) -> (Vec<ScalarState>, Vec<u8>) {
        let t = self.current + 1;
        let (w, h) = (self.width, self.height);
        let sources = self.sources(t);
        let steps: Vec<Arc<FouTriplet>> = sources
            .iter()
            .map(|&s| provider.get(s, t).expect("provider"))
            .collect();

        let mut result = Vec::with_capacity(w * h);
        let mut indices = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let mut candidates = Vec::with_capacity(sources.len());
                for (k, &s) in sources.iter().enumerate() {
                    let prev = self.memory[&s][i];
                    let qx = x as f32 + prev.fx;
                    let qy = y as f32 + prev.fy;
                    let step = &steps[k];
                    let flow = step.flow.data();
                    let sx = bilinear(&|a, b| flow[b * w + a].x, w, h, qx, qy);
                    let sy = bilinear(&|a, b| flow[b * w + a].y, w, h, qx, qy);
                    let occ_map = step.occlusion.data();
                    let so = bilinear(&|a, b| occ_map[b * w + a], w, h, qx, qy);
                    let unc_map = step.uncertainty.data();
                    let su = bilinear(&|a, b| unc_map[b * w + a], w, h, qx, qy);
                    let oob = qx < 0.0 || qy < 0.0 || qx > (w - 1) as f32 || qy > (h - 1) as f32;
                    candidates.push(ScalarState {
                        fx: prev.fx + sx,
                        fy: prev.fy + sy,
                        occ: if oob { 1.0 } else { prev.occ.max(so) },
                        unc: prev.unc + su,
                    });
                }

                let mut best: Option<usize> = None;
                for (k, c) in candidates.iter().enumerate() {
                    if c.occ <= self.theta_o {
                        best = match best {
                            Some(b) if candidates[b].unc <= c.unc => Some(b),
                            _ => Some(k),
                        };
                    }
                }
                let chosen = best.unwrap_or(0);
                indices.push(chosen as u8);
                result.push(candidates[chosen]);
            }
        }

        self.memory.insert(t, result.clone());
        self.current = t;
        (result, indices)
    }
}

// --- seeded scene generation -----------------------------------------------

pub fn full_cover_background() -> Region {
    Region::Rect {
        x0: -1e6,
        y0: -1e6,
        x1: 1e6,
        y1: 1e6,
    }
}

/// Randomized layered scene: a slowly moving background plus one to three
/// sprites with translation or similarity motion.
pub fn random_scene(width: usize, height: usize, num_frames: usize, seed: u64) -> SceneModel {
    let mut s = Stream::new(derive_key(&[seed, 0x5ce7e]));
    let background = Layer::from_motion(
        full_cover_background(),
        &Motion::Velocity {
            vx: s.range(-0.4, 0.4),
            vy: s.range(-0.4, 0.4),
        },
        num_frames,
    )
    .unwrap();

    let mut layers = vec![background];
    let sprite_count = 1 + (s.next_u64() % 3) as usize;
    for _ in 0..sprite_count {
        let cx = s.range(10.0, width as f64 - 10.0);
        let cy = s.range(10.0, height as f64 - 10.0);
        let size = s.range(4.0, 10.0);
        let region = if s.next_f64() < 0.5 {
            Region::Rect {
                x0: cx - size,
                y0: cy - size,
                x1: cx + size,
                y1: cy + size,
            }
        } else {
            Region::Disc {
                cx,
                cy,
                radius: size,
            }
        };
        let motion = if s.next_f64() < 0.6 {
            Motion::Velocity {
                vx: s.range(-1.0, 1.0),
                vy: s.range(-1.0, 1.0),
            }
        } else {
            Motion::Similarity {
                anchor: [cx, cy],
                angular_velocity: s.range(-0.04, 0.04),
                scale_rate: s.range(0.99, 1.01),
                vx: s.range(-0.6, 0.6),
                vy: s.range(-0.6, 0.6),
            }
        };
        layers.push(Layer::from_motion(region, &motion, num_frames).unwrap());
    }
    SceneModel::new(width, height, num_frames, layers).unwrap()
}

/// Scene whose occluder teleports onto `target` for frames `[gap_start,
/// gap_start + gap_len)` and sits parked elsewhere otherwise. The background
/// is static, so `target` has constant ground-truth position.
pub fn occlusion_gap_scene(
    width: usize,
    height: usize,
    num_frames: usize,
    target: (f64, f64),
    gap_start: usize,
    gap_len: usize,
) -> SceneModel {
    let background =
        Layer::from_motion(full_cover_background(), &Motion::Static, num_frames).unwrap();
    let park = (4.0, 4.0);
    let half = 2.75;
    let transforms: Vec<Affine2> = (0..num_frames)
        .map(|t| {
            if t >= gap_start && t < gap_start + gap_len {
                Affine2::translation(target.0 - park.0, target.1 - park.1)
            } else {
                Affine2::IDENTITY
            }
        })
        .collect();
    let occluder = Layer::new(
        Region::Rect {
            x0: park.0 - half,
            y0: park.1 - half,
            x1: park.0 + half,
            y1: park.1 + half,
        },
        transforms,
    )
    .unwrap();
    SceneModel::new(width, height, num_frames, vec![background, occluder]).unwrap()
}
