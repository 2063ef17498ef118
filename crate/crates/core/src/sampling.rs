//! Bilinear sampling of flow and scalar grids at non-integer positions.
//!
//! Positions outside `[0, W-1] x [0, H-1]` are clamped to the border before
//! blending, so sampling never produces NaN; the chaining stage separately
//! forces occlusion for out-of-view positions. Sampling at integer
//! coordinates returns the stored value exactly, which several callers rely
//! on for bit-exact identities.

use crate::error::{Error, Result};
use crate::types::{FlowField, PositionMap, ScalarMap, Vec2};

/// True iff `pos` lies outside `[0, W-1] x [0, H-1]` (borders inclusive).
pub fn out_of_bounds(pos: Vec2, width: usize, height: usize) -> bool {
    pos.x < 0.0 || pos.y < 0.0 || pos.x > (width - 1) as f32 || pos.y > (height - 1) as f32
}

/// Tap indices and blend weights for one clamped bilinear lookup.
///
/// The weight arithmetic is fixed: `wx1 = x - floor(x)` in f32, `wx0 = 1 -
/// wx1`, and the blend is `(v00*wx0 + v10*wx1)*wy0 + (v01*wx0 + v11*wx1)*wy1`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Taps {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
    pub wx1: f32,
    pub wy1: f32,
}

#[inline]
pub(crate) fn taps(pos: Vec2, width: usize, height: usize) -> Taps {
    let max_x = (width - 1) as f32;
    let max_y = (height - 1) as f32;
    let x = pos.x.clamp(0.0, max_x);
    let y = pos.y.clamp(0.0, max_y);
    let x0 = x.floor();
    let y0 = y.floor();
    let x0i = x0 as usize;
    let y0i = y0 as usize;
    Taps {
        x0: x0i,
        x1: (x0i + 1).min(width - 1),
        y0: y0i,
        y1: (y0i + 1).min(height - 1),
        wx1: x - x0,
        wy1: y - y0,
    }
}

#[inline]
pub(crate) fn blend(t: Taps, v00: f32, v10: f32, v01: f32, v11: f32) -> f32 {
    let wx0 = 1.0 - t.wx1;
    let wy0 = 1.0 - t.wy1;
    let top = v00 * wx0 + v10 * t.wx1;
    let bottom = v01 * wx0 + v11 * t.wx1;
    top * wy0 + bottom * t.wy1
}

#[inline]
pub(crate) fn sample_scalar_clamped(map: &ScalarMap, pos: Vec2) -> f32 {
    let t = taps(pos, map.width(), map.height());
    let d = map.data();
    let w = map.width();
    blend(
        t,
        d[t.y0 * w + t.x0],
        d[t.y0 * w + t.x1],
        d[t.y1 * w + t.x0],
        d[t.y1 * w + t.x1],
    )
}

#[inline]
pub(crate) fn sample_flow_clamped(field: &FlowField, pos: Vec2) -> Vec2 {
    let t = taps(pos, field.width(), field.height());
    let d = field.data();
    let w = field.width();
    let v00 = d[t.y0 * w + t.x0];
    let v10 = d[t.y0 * w + t.x1];
    let v01 = d[t.y1 * w + t.x0];
    let v11 = d[t.y1 * w + t.x1];
    Vec2::new(
        blend(t, v00.x, v10.x, v01.x, v11.x),
        blend(t, v00.y, v10.y, v01.y, v11.y),
    )
}

/// Bilinear sample of a scalar map; out-of-bounds positions clamp to the
/// border. Rejects non-finite positions.
pub fn sample_scalar(map: &ScalarMap, pos: Vec2) -> Result<f32> {
    if !pos.is_finite() {
        return Err(Error::NonFinitePosition { x: pos.x, y: pos.y });
    }
    Ok(sample_scalar_clamped(map, pos))
}

/// Bilinear sample of a flow field, componentwise.
pub fn sample_flow(field: &FlowField, pos: Vec2) -> Result<Vec2> {
    if !pos.is_finite() {
        return Err(Error::NonFinitePosition { x: pos.x, y: pos.y });
    }
    Ok(sample_flow_clamped(field, pos))
}

/// Builds the position map `P[p] = p + flow[p]` over the integer grid.
pub fn build_position_map(flow: &FlowField) -> PositionMap {
    let (w, h) = (flow.width(), flow.height());
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let f = flow.get(x, y);
            data.push(Vec2::new(x as f32 + f.x, y as f32 + f.y));
        }
    }
    // Inputs are finite by FlowField's invariant, so this cannot fail.
    PositionMap::new(w, h, data).expect("position map from valid flow")
}
