//! `mft eval`: score tracklet files against ground-truth tracks.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use mft_core::metrics::{
    evaluate, EvalMode, GtTrackSet, Rescale, TrackSource, TrackletFile, TrackletPool,
};

pub struct EvalArgs<'a> {
    pub tracklet_paths: &'a [PathBuf],
    pub gt_path: &'a Path,
    pub mode: EvalMode,
    pub rescale: Option<Rescale>,
    pub out_path: Option<&'a Path>,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let gt = GtTrackSet::load(args.gt_path)
        .with_context(|| format!("loading ground truth {}", args.gt_path.display()))?;
    let runs = args
        .tracklet_paths
        .iter()
        .map(|p| {
            TrackletFile::load(p).with_context(|| format!("loading tracklets {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let pool = TrackletPool::new(runs)?;

    if args.rescale.is_none() && pool.grid_size() != (gt.width, gt.height) {
        anyhow::bail!(
            "tracklets are on a {}x{} grid but ground truth is {}x{}; pass --rescale",
            pool.grid_size().0,
            pool.grid_size().1,
            gt.width,
            gt.height
        );
    }

    let report = evaluate(&pool, &gt.tracks, args.mode, args.rescale)?;
    print!("{}", report.to_table());
    if let Some(out) = args.out_path {
        std::fs::write(out, report.to_toml_string()?)
            .with_context(|| format!("writing report {}", out.display()))?;
    }
    Ok(())
}
