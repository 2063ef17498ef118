//! `mft track`: run the tracker over a precomputed dataset and write
//! tracklets (and optionally the dense per-frame results).

use std::path::Path;

use anyhow::{Context, Result};

use mft_core::flowio::{write_flo, write_map, MapKind, PrecomputedProvider};
use mft_core::metrics::TrackletFile;
use mft_core::tracker::{
    extract_tracklets, track_sequence, DeltaSet, Direction, ReversedProvider, ShiftedProvider,
};
use mft_core::types::QuerySet;

use super::{fou_paths, QueriesFile};

pub struct TrackArgs<'a> {
    pub manifest_path: &'a Path,
    pub delta_set: DeltaSet,
    pub theta_o: f32,
    pub queries_path: &'a Path,
    pub direction: Direction,
    pub init_frame: Option<usize>,
    pub out_path: &'a Path,
    pub save_fou: Option<&'a Path>,
}

pub fn run(args: &TrackArgs) -> Result<()> {
    let provider = PrecomputedProvider::open(args.manifest_path)
        .with_context(|| format!("opening manifest {}", args.manifest_path.display()))?;
    let manifest = provider.manifest();
    let (width, height, num_frames) = (manifest.width, manifest.height, manifest.num_frames);

    let queries: QuerySet = QueriesFile::load(args.queries_path)?;
    if queries.width() != width || queries.height() != height {
        anyhow::bail!(
            "queries are on a {}x{} grid, dataset is {width}x{height}",
            queries.width(),
            queries.height()
        );
    }

    let init_frame = args.init_frame.unwrap_or(match args.direction {
        Direction::Forward => 0,
        Direction::Backward => num_frames - 1,
    });
    if init_frame >= num_frames {
        anyhow::bail!("init frame {init_frame} out of range (dataset has {num_frames} frames)");
    }

    // Engine frame e corresponds to real frame init + e (forward) or
    // init - e (backward).
    let results = match args.direction {
        Direction::Forward => {
            let shifted = ShiftedProvider::new(&provider, init_frame);
            track_sequence(
                &shifted,
                width,
                height,
                num_frames - init_frame,
                &args.delta_set,
                args.theta_o,
                Direction::Forward,
            )?
        }
        Direction::Backward => {
            let reversed = ReversedProvider::new(&provider, init_frame);
            track_sequence(
                &reversed,
                width,
                height,
                init_frame + 1,
                &args.delta_set,
                args.theta_o,
                Direction::Forward,
            )?
        }
    };

    if let Some(dir) = args.save_fou {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (e, result) in results.iter().enumerate() {
            let real = match args.direction {
                Direction::Forward => init_frame + e,
                Direction::Backward => init_frame - e,
            };
            let (flow_path, occ_path, unc_path) = fou_paths(dir, real);
            write_flo(&flow_path, &result.flow)?;
            write_map(&occ_path, &result.occlusion, MapKind::Occlusion)?;
            write_map(&unc_path, &result.uncertainty, MapKind::Uncertainty)?;
        }
    }

    let tracklets = extract_tracklets(&results, &queries, args.theta_o)?;
    TrackletFile {
        width,
        height,
        num_frames,
        init_frame,
        direction: args.direction,
        theta_o: args.theta_o,
        deltas: args.delta_set.to_string(),
        tracklets,
    }
    .save(args.out_path)?;

    println!(
        "tracked {} queries over {} frames ({} from frame {init_frame}) -> {}",
        queries.len(),
        results.len(),
        args.direction,
        args.out_path.display()
    );
    Ok(())
}

/// File-backed tracking cannot serve `inf` deltas: direct flows from every
/// possible reference frame would need quadratic storage.
pub fn reject_inf_for_files(delta_set: &DeltaSet) -> Result<(), String> {
    if delta_set.contains_inf() {
        return Err(
            "delta set contains 'inf', which precomputed datasets cannot serve; \
             use integer deltas (e.g. --deltas 1,2,4,8,16,32)"
                .into(),
        );
    }
    Ok(())
}
