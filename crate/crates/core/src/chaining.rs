//! Composition of a previously accumulated result with a fresh step triplet.
//!
//! For every grid position `p`, the chained position is `q = p + prev.flow[p]`
//! and the candidate is assembled from three per-pixel rules:
//!
//! * flow adds: `prev.flow[p] + step.flow<q>`
//! * occlusion takes the maximum of both scores ("or" after thresholding),
//!   and is forced to 1.0 when `q` leaves the image — no evidence exists
//!   outside the frame
//! * uncertainty adds, treating the per-link variances as independent
//!
//! `<.>` is clamped bilinear sampling. All pixels are independent, so the
//! grid is partitioned across threads; output is identical for any worker
//! count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::{blend, out_of_bounds, taps};
use crate::types::{FlowField, FouTriplet, ScalarMap, Vec2};

/// Chains `prev` (frames `0 -> t-delta`) with `step` (`t-delta -> t`) into a
/// candidate for `0 -> t`. Fails on frame-stamp or grid-size mismatches.
pub fn chain(prev: &FouTriplet, step: &FouTriplet) -> Result<FouTriplet> {
    if prev.dst_frame != step.src_frame {
        return Err(Error::FrameMismatch {
            prev_dst: prev.dst_frame,
            step_src: step.src_frame,
        });
    }
    let (w, h) = (prev.width(), prev.height());
    if step.width() != w || step.height() != h {
        return Err(Error::GridMismatch(w, h, step.width(), step.height()));
    }

    let n = w * h;
    let mut flow = vec![Vec2::ZERO; n];
    let mut occlusion = vec![0.0f32; n];
    let mut uncertainty = vec![0.0f32; n];

    let prev_flow = prev.flow.data();
    let prev_occ = prev.occlusion.data();
    let prev_unc = prev.uncertainty.data();
    let step_flow = step.flow.data();
    let step_occ = step.occlusion.data();
    let step_unc = step.uncertainty.data();

    flow.par_chunks_mut(w)
        .zip(occlusion.par_chunks_mut(w))
        .zip(uncertainty.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((flow_row, occ_row), unc_row))| {
            for x in 0..w {
                let i = y * w + x;
                let pf = prev_flow[i];
                let q = Vec2::new(x as f32 + pf.x, y as f32 + pf.y);
                let t = taps(q, w, h);
                let (i00, i10) = (t.y0 * w + t.x0, t.y0 * w + t.x1);
                let (i01, i11) = (t.y1 * w + t.x0, t.y1 * w + t.x1);

                let sampled_flow = Vec2::new(
                    blend(
                        t,
                        step_flow[i00].x,
                        step_flow[i10].x,
                        step_flow[i01].x,
                        step_flow[i11].x,
                    ),
                    blend(
                        t,
                        step_flow[i00].y,
                        step_flow[i10].y,
                        step_flow[i01].y,
                        step_flow[i11].y,
                    ),
                );
                flow_row[x] = pf + sampled_flow;

                let sampled_occ = blend(
                    t,
                    step_occ[i00],
                    step_occ[i10],
                    step_occ[i01],
                    step_occ[i11],
                );
                let mut occ = prev_occ[i].max(sampled_occ);
                if out_of_bounds(q, w, h) {
                    occ = 1.0;
                }
                occ_row[x] = occ;

                let sampled_unc = blend(
                    t,
                    step_unc[i00],
                    step_unc[i10],
                    step_unc[i01],
                    step_unc[i11],
                );
                unc_row[x] = prev_unc[i] + sampled_unc;
            }
        });

    FouTriplet::new(
        FlowField::new(w, h, flow)?,
        ScalarMap::new(w, h, occlusion)?,
        ScalarMap::new(w, h, uncertainty)?,
        prev.src_frame,
        step.dst_frame,
    )
}
