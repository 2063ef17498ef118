//! Per-pixel selection of the best candidate chain and result composition.
//!
//! A candidate is admissible at a pixel when its occlusion score is at or
//! below the threshold `theta_o`. Among admissible candidates the one with
//! the lowest uncertainty wins, ties going to the earliest list position
//! (the most direct chain in the declared delta order). When every candidate
//! is occluded, all are equally good and the first is selected. The Iverson
//! infinity penalty is realized as exclusion-then-fallback rather than
//! arithmetic infinity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{FlowField, FouTriplet, ScalarMap, Vec2};

/// Per-pixel index into an ordered candidate list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaIndexMap {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl DeltaIndexMap {
    pub fn new(width: usize, height: usize, data: Vec<u8>, num_candidates: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(Error::DataLength {
                width,
                height,
                expected: width * height,
                got: data.len(),
            });
        }
        if let Some(&bad) = data.iter().find(|&&i| i as usize >= num_candidates) {
            return Err(Error::IndexOutOfRange {
                index: bad as usize,
                count: num_candidates,
            });
        }
        Ok(DeltaIndexMap {
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

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }
}

fn check_candidates(candidates: &[FouTriplet]) -> Result<(usize, usize)> {
    let first = candidates.first().ok_or(Error::EmptyCandidates)?;
    if candidates.len() > 256 {
        return Err(Error::TooManyCandidates(candidates.len()));
    }
    let (w, h) = (first.width(), first.height());
    for c in candidates {
        if c.width() != w || c.height() != h {
            return Err(Error::GridMismatch(w, h, c.width(), c.height()));
        }
        if c.dst_frame != first.dst_frame {
            return Err(Error::FrameMismatch {
                prev_dst: first.dst_frame,
                step_src: c.dst_frame,
            });
        }
    }
    Ok((w, h))
}

/// Picks, per pixel, the admissible candidate with the lowest uncertainty;
/// falls back to index 0 when all candidates are occluded.
pub fn select_best(candidates: &[FouTriplet], theta_o: f32) -> Result<DeltaIndexMap> {
    let (w, h) = check_candidates(candidates)?;
    if !(theta_o > 0.0 && theta_o < 1.0) {
        return Err(Error::ThresholdRange { value: theta_o });
    }

    let occ: Vec<&[f32]> = candidates.iter().map(|c| c.occlusion.data()).collect();
    let unc: Vec<&[f32]> = candidates.iter().map(|c| c.uncertainty.data()).collect();

    let mut data = vec![0u8; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let i = y * w + x;
            let mut best: Option<(u8, f32)> = None;
            for k in 0..candidates.len() {
                if occ[k][i] <= theta_o {
                    match best {
                        // Strict '<' keeps the earliest candidate on ties.
                        Some((_, u)) if unc[k][i] < u => best = Some((k as u8, unc[k][i])),
                        None => best = Some((k as u8, unc[k][i])),
                        _ => {}
                    }
                }
            }
            row[x] = best.map_or(0, |(k, _)| k);
        }
    });

    DeltaIndexMap::new(w, h, data, candidates.len())
}

/// Copies each pixel of flow, occlusion and uncertainty from the indexed
/// candidate. Frame stamps are inherited from the candidates.
pub fn compose_result(candidates: &[FouTriplet], index_map: &DeltaIndexMap) -> Result<FouTriplet> {
    let (w, h) = check_candidates(candidates)?;
    if index_map.width() != w || index_map.height() != h {
        return Err(Error::GridMismatch(
            w,
            h,
            index_map.width(),
            index_map.height(),
        ));
    }
    if let Some(&bad) = index_map
        .data()
        .iter()
        .find(|&&i| i as usize >= candidates.len())
    {
        return Err(Error::IndexOutOfRange {
            index: bad as usize,
            count: candidates.len(),
        });
    }

    let n = w * h;
    let mut flow = vec![Vec2::ZERO; n];
    let mut occlusion = vec![0.0f32; n];
    let mut uncertainty = vec![0.0f32; n];
    let idx = index_map.data();
    for i in 0..n {
        let c = &candidates[idx[i] as usize];
        flow[i] = c.flow.data()[i];
        occlusion[i] = c.occlusion.data()[i];
        uncertainty[i] = c.uncertainty.data()[i];
    }

    FouTriplet::new(
        FlowField::new(w, h, flow)?,
        ScalarMap::new(w, h, occlusion)?,
        ScalarMap::new(w, h, uncertainty)?,
        candidates[0].src_frame,
        candidates[0].dst_frame,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn candidate(w: usize, h: usize, occ: Vec<f32>, unc: Vec<f32>) -> FouTriplet {
        FouTriplet::new(
            FlowField::zeros(w, h).unwrap(),
            ScalarMap::new(w, h, occ).unwrap(),
            ScalarMap::new(w, h, unc).unwrap(),
            0,
            1,
        )
        .unwrap()
    }

    fn single_pixel_candidates(pairs: &[(f32, f32)]) -> Vec<FouTriplet> {
        // (uncertainty, occlusion) per candidate on a 1x1 grid.
        pairs
            .iter()
            .map(|&(u, o)| candidate(1, 1, vec![o], vec![u]))
            .collect()
    }

    #[test]
    fn single_candidate_selects_zero() {
        let c = single_pixel_candidates(&[(3.0, 0.0)]);
        let m = select_best(&c, 0.02).unwrap();
        assert_eq!(m.data(), &[0]);
    }

    #[test]
    fn occluded_candidate_excluded() {
        // Candidate 1 is occluded; 2.0 < 3.0 among the admissible ones.
        let c = single_pixel_candidates(&[(3.0, 0.0), (1.5, 0.5), (2.0, 0.0)]);
        let m = select_best(&c, 0.02).unwrap();
        assert_eq!(m.data(), &[2]);
    }

    #[test]
    fn all_occluded_falls_back_to_first() {
        let c = single_pixel_candidates(&[(1.0, 0.5), (1.0, 0.9)]);
        let m = select_best(&c, 0.02).unwrap();
        assert_eq!(m.data(), &[0]);
    }

    #[test]
    fn equal_uncertainty_prefers_earliest() {
        let c = single_pixel_candidates(&[(1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]);
        let m = select_best(&c, 0.02).unwrap();
        assert_eq!(m.data(), &[0]);
    }

    #[test]
    fn empty_candidates_rejected() {
        assert!(matches!(
            select_best(&[], 0.02),
            Err(Error::EmptyCandidates)
        ));
    }

    #[test]
    fn compose_all_zero_index_returns_first_candidate() {
        let c = single_pixel_candidates(&[(3.0, 0.0), (2.0, 0.1)]);
        let m = DeltaIndexMap::new(1, 1, vec![0], 2).unwrap();
        let out = compose_result(&c, &m).unwrap();
        assert_eq!(out, c[0]);
    }

    #[test]
    fn compose_mixes_per_pixel() {
        let a = candidate(2, 1, vec![0.0, 0.0], vec![1.0, 2.0]);
        let b = candidate(2, 1, vec![0.5, 0.25], vec![3.0, 4.0]);
        let m = DeltaIndexMap::new(2, 1, vec![0, 1], 2).unwrap();
        let out = compose_result(&[a, b], &m).unwrap();
        assert_eq!(out.uncertainty.data(), &[1.0, 4.0]);
        assert_eq!(out.occlusion.data(), &[0.0, 0.25]);
    }

    #[test]
    fn compose_select_roundtrip_single_candidate() {
        let c = single_pixel_candidates(&[(0.7, 0.0)]);
        let m = select_best(&c, 0.02).unwrap();
        let out = compose_result(&c, &m).unwrap();
        assert_eq!(out, c[0]);
    }

    #[test]
    fn index_out_of_range_rejected() {
        let c = single_pixel_candidates(&[(1.0, 0.0)]);
        assert!(DeltaIndexMap::new(1, 1, vec![1], 1).is_err());
        let m = DeltaIndexMap::new(1, 1, vec![1], 2).unwrap();
        assert!(matches!(
            compose_result(&c, &m),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    fn random_candidates(seed: u64, k: usize, n: usize) -> Vec<FouTriplet> {
        let mut s = seed;
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 33) as f32 / (1u64 << 31) as f32
        };
        (0..k)
            .map(|_| {
                let occ: Vec<f32> = (0..n)
                    .map(|_| if next() < 0.3 { 0.5 } else { 0.0 })
                    .collect();
                let unc: Vec<f32> = (0..n).map(|_| next() * 4.0).collect();
                candidate(n, 1, occ, unc)
            })
            .collect()
    }

    proptest! {
        // Scaling every uncertainty by the same positive constant leaves the
        // selection unchanged.
        #[test]
        fn argmin_invariant_under_positive_scaling(seed in 0u64..300, scale in 0.25f32..8.0) {
            let cands = random_candidates(seed, 4, 16);
            let scaled: Vec<FouTriplet> = cands
                .iter()
                .map(|c| {
                    let unc: Vec<f32> = c.uncertainty.data().iter().map(|u| u * scale).collect();
                    FouTriplet::new(
                        c.flow.clone(),
                        c.occlusion.clone(),
                        ScalarMap::new(16, 1, unc).unwrap(),
                        c.src_frame,
                        c.dst_frame,
                    )
                    .unwrap()
                })
                .collect();
            let a = select_best(&cands, 0.02).unwrap();
            let b = select_best(&scaled, 0.02).unwrap();
            prop_assert_eq!(a, b);
        }

        // The composed uncertainty is minimal among admissible candidates.
        #[test]
        fn selected_uncertainty_minimal(seed in 0u64..300) {
            let cands = random_candidates(seed, 5, 16);
            let idx = select_best(&cands, 0.02).unwrap();
            let out = compose_result(&cands, &idx).unwrap();
            for i in 0..16 {
                let admissible: Vec<f32> = cands
                    .iter()
                    .filter(|c| c.occlusion.data()[i] <= 0.02)
                    .map(|c| c.uncertainty.data()[i])
                    .collect();
                if !admissible.is_empty() {
                    let min = admissible.iter().cloned().fold(f32::INFINITY, f32::min);
                    prop_assert_eq!(out.uncertainty.data()[i], min);
                }
            }
        }

        // Identical inputs yield bit-identical index maps.
        #[test]
        fn selection_deterministic(seed in 0u64..300) {
            let cands = random_candidates(seed, 4, 32);
            let a = select_best(&cands, 0.02).unwrap();
            let b = select_best(&cands, 0.02).unwrap();
            prop_assert_eq!(a.data(), b.data());
        }
    }
}
