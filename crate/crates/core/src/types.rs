//! Shared grid value types and the project-wide coordinate conventions.
//!
//! Conventions, fixed for the whole crate: x grows rightward, y grows
//! downward, pixel centers sit at integer coordinates, and a flow vector
//! `(dx, dy)` stored at `(x, y)` means the point at `(x, y)` in the source
//! frame lies at `(x + dx, y + dy)` in the destination frame. All grids are
//! row-major, 32-bit floats; accumulation for selection and metrics happens
//! in 64-bit. Every type is an immutable value after construction and safe
//! to share across threads.

use std::ops::{Add, Sub};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A 2-vector in pixel units. Doubles as a position and a displacement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f32,
    pub y: f32,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f32, y: f32) -> Self {
        Vec2 { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Euclidean norm, accumulated in f64.
    pub fn norm(self) -> f64 {
        (self.x as f64).hypot(self.y as f64)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    Ok(())
}

fn check_len(width: usize, height: usize, got: usize) -> Result<()> {
    let expected = width * height;
    if got != expected {
        return Err(Error::DataLength {
            width,
            height,
            expected,
            got,
        });
    }
    Ok(())
}

/// Dense H x W field of displacement vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    data: Vec<Vec2>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, data: Vec<Vec2>) -> Result<Self> {
        check_dims(width, height)?;
        check_len(width, height, data.len())?;
        if !data.par_iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "flow field",
            });
        }
        Ok(FlowField {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(FlowField {
            width,
            height,
            data: vec![Vec2::ZERO; width * height],
        })
    }

    /// Builds a field by evaluating `f` at every integer grid position.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Vec2,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        FlowField::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Vec2 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[Vec2] {
        &self.data
    }
}

/// Dense H x W field of scalars. Holds occlusion scores (in `[0, 1]`) or
/// uncertainty variances (`>= 0`); the range is enforced where the usage is
/// known, at [`FouTriplet`] construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ScalarMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        check_len(width, height, data.len())?;
        if !data.par_iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "scalar map",
            });
        }
        Ok(ScalarMap {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(ScalarMap {
            width,
            height,
            data: vec![0.0; width * height],
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        ScalarMap::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Flow, occlusion and uncertainty bundled for one frame pair (or one chain
/// of pairs). The three grids always share dimensions; occlusion values lie
/// in `[0, 1]` and uncertainties are non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct FouTriplet {
    pub flow: FlowField,
    pub occlusion: ScalarMap,
    pub uncertainty: ScalarMap,
    pub src_frame: usize,
    pub dst_frame: usize,
}

impl FouTriplet {
    pub fn new(
        flow: FlowField,
        occlusion: ScalarMap,
        uncertainty: ScalarMap,
        src_frame: usize,
        dst_frame: usize,
    ) -> Result<Self> {
        let (w, h) = (flow.width(), flow.height());
        for map in [&occlusion, &uncertainty] {
            if map.width() != w || map.height() != h {
                return Err(Error::GridMismatch(w, h, map.width(), map.height()));
            }
        }
        if let Some(&v) = occlusion
            .data()
            .par_iter()
            .find_any(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::OcclusionRange { value: v });
        }
        if let Some(&v) = uncertainty.data().par_iter().find_any(|v| **v < 0.0) {
            return Err(Error::NegativeUncertainty { value: v });
        }
        Ok(FouTriplet {
            flow,
            occlusion,
            uncertainty,
            src_frame,
            dst_frame,
        })
    }

    /// The all-zero triplet: no motion, no occlusion, no uncertainty.
    /// This is the tracker state on its initialization frame.
    pub fn identity(width: usize, height: usize, frame: usize) -> Result<Self> {
        Ok(FouTriplet {
            flow: FlowField::zeros(width, height)?,
            occlusion: ScalarMap::zeros(width, height)?,
            uncertainty: ScalarMap::zeros(width, height)?,
            src_frame: frame,
            dst_frame: frame,
        })
    }

    pub fn width(&self) -> usize {
        self.flow.width()
    }

    pub fn height(&self) -> usize {
        self.flow.height()
    }
}

/// Dense H x W map of absolute point positions: `P[p] = p + flow[p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMap {
    width: usize,
    height: usize,
    data: Vec<Vec2>,
}

impl PositionMap {
    pub fn new(width: usize, height: usize, data: Vec<Vec2>) -> Result<Self> {
        check_dims(width, height)?;
        check_len(width, height, data.len())?;
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "position map",
            });
        }
        Ok(PositionMap {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Vec2 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[Vec2] {
        &self.data
    }
}

/// Query points on the reference frame. Every point is validated against the
/// reference grid bounds `[0, W-1] x [0, H-1]` at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    width: usize,
    height: usize,
    points: Vec<Vec2>,
}

impl QuerySet {
    pub fn new(width: usize, height: usize, points: Vec<Vec2>) -> Result<Self> {
        check_dims(width, height)?;
        for p in &points {
            if !p.is_finite()
                || p.x < 0.0
                || p.y < 0.0
                || p.x > (width - 1) as f32
                || p.y > (height - 1) as f32
            {
                return Err(Error::QueryOutOfBounds {
                    x: p.x,
                    y: p.y,
                    width,
                    height,
                });
            }
        }
        Ok(QuerySet {
            width,
            height,
            points,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-frame record of one tracked query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackletEntry {
    pub position: Vec2,
    /// Continuous occlusion score sampled from the result map.
    pub occlusion_score: f32,
    /// `occlusion_score > theta_o` at extraction time.
    pub occluded: bool,
}

/// Trajectory and visibility record of one query point, indexed by frame of
/// the tracked sequence (entry 0 is the reference frame itself).
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub query: Vec2,
    pub entries: Vec<TrackletEntry>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_triplet_is_all_zero() {
        let t = FouTriplet::identity(2, 2, 0).unwrap();
        assert_eq!(t.flow.data().len(), 4);
        assert!(t.flow.data().iter().all(|v| *v == Vec2::ZERO));
        assert!(t.occlusion.data().iter().all(|v| *v == 0.0));
        assert!(t.uncertainty.data().iter().all(|v| *v == 0.0));
        assert_eq!((t.src_frame, t.dst_frame), (0, 0));
    }

    #[test]
    fn identity_triplet_single_pixel() {
        let t = FouTriplet::identity(1, 1, 5).unwrap();
        assert_eq!((t.src_frame, t.dst_frame), (5, 5));
        assert_eq!(t.flow.get(0, 0), Vec2::ZERO);
    }

    #[test]
    fn identity_triplet_rejects_zero_dims() {
        assert!(FouTriplet::identity(0, 3, 0).is_err());
        assert!(FouTriplet::identity(3, 0, 0).is_err());
    }

    #[test]
    fn mismatched_data_length_fails() {
        assert!(FlowField::new(2, 2, vec![Vec2::ZERO; 3]).is_err());
        assert!(ScalarMap::new(2, 2, vec![0.0; 5]).is_err());
    }

    #[test]
    fn non_finite_values_rejected() {
        assert!(FlowField::new(1, 1, vec![Vec2::new(f32::NAN, 0.0)]).is_err());
        assert!(ScalarMap::new(1, 1, vec![f32::INFINITY]).is_err());
    }

    #[test]
    fn triplet_grid_mismatch_fails() {
        let flow = FlowField::zeros(2, 2).unwrap();
        let occ = ScalarMap::zeros(2, 2).unwrap();
        let unc = ScalarMap::zeros(3, 2).unwrap();
        assert!(FouTriplet::new(flow, occ, unc, 0, 1).is_err());
    }

    #[test]
    fn triplet_enforces_score_ranges() {
        let flow = FlowField::zeros(1, 1).unwrap();
        let bad_occ = ScalarMap::new(1, 1, vec![1.5]).unwrap();
        let unc = ScalarMap::zeros(1, 1).unwrap();
        assert!(matches!(
            FouTriplet::new(flow.clone(), bad_occ, unc.clone(), 0, 1),
            Err(Error::OcclusionRange { .. })
        ));

        let occ = ScalarMap::zeros(1, 1).unwrap();
        let bad_unc = ScalarMap::new(1, 1, vec![-0.25]).unwrap();
        assert!(matches!(
            FouTriplet::new(flow, occ, bad_unc, 0, 1),
            Err(Error::NegativeUncertainty { .. })
        ));
    }

    #[test]
    fn query_set_bounds() {
        assert!(QuerySet::new(4, 4, vec![Vec2::new(3.0, 3.0)]).is_ok());
        assert!(QuerySet::new(4, 4, vec![Vec2::new(3.01, 0.0)]).is_err());
        assert!(QuerySet::new(4, 4, vec![Vec2::new(-0.01, 1.0)]).is_err());
    }
}
