//! `mft ablate`: compare delta sets on one dataset, one table row per set.
//!
//! Integer-only sets run from the precomputed files; sets containing `inf`
//! rebuild the deterministic synthetic provider from the dataset's recorded
//! scene and noise, since direct flows are never stored. Both providers
//! serve bit-identical triplets for the stored pairs.

use std::path::Path;

use anyhow::{Context, Result};

use mft_core::flowio::{PrecomputedProvider, SyntheticProvider};
use mft_core::metrics::{evaluate, EngineTrackSource, EvalMode, EvalReport, GtTrackSet};
use mft_core::synth::SceneModel;
use mft_core::tracker::{DeltaSet, FlowProvider};

use super::DatasetMeta;

pub struct AblateArgs<'a> {
    pub dataset_dir: &'a Path,
    pub delta_sets: Vec<DeltaSet>,
    pub theta_o: f32,
    pub mode: EvalMode,
    pub out_path: Option<&'a Path>,
}

pub fn run(args: &AblateArgs) -> Result<()> {
    let meta = DatasetMeta::load(args.dataset_dir)?;
    let gt = GtTrackSet::load(&args.dataset_dir.join(&meta.gt_tracks))?;

    let needs_synthetic = args.delta_sets.iter().any(DeltaSet::contains_inf);
    let scene: Option<SceneModel> = if needs_synthetic {
        Some(
            SceneModel::load(&args.dataset_dir.join(&meta.scene)).with_context(|| {
                "delta sets with 'inf' need the dataset's scene metadata".to_string()
            })?,
        )
    } else {
        None
    };
    let file_provider = PrecomputedProvider::open(&args.dataset_dir.join(&meta.manifest))?;
    let synth_provider = scene.map(|s| SyntheticProvider::new(s, meta.noise.clone()));

    let mut seen: Vec<String> = Vec::new();
    let mut rows: Vec<(String, EvalReport)> = Vec::new();
    for ds in &args.delta_sets {
        let name = ds.to_string();
        if seen.contains(&name) {
            eprintln!("warning: delta set {{{name}}} listed more than once");
        }
        seen.push(name.clone());

        let provider: &dyn FlowProvider = if ds.contains_inf() {
            synth_provider.as_ref().expect("loaded above")
        } else {
            &file_provider
        };
        let source = EngineTrackSource {
            provider,
            width: gt.width,
            height: gt.height,
            num_frames: gt.num_frames,
            delta_set: ds.clone(),
            theta_o: args.theta_o,
        };
        let report = evaluate(&source, &gt.tracks, args.mode, None)?;
        rows.push((name, report));
    }

    let mut table = String::new();
    table.push_str(&format!(
        "{:<24} {:>8} {:>11} {:>8}\n",
        "deltas", "AJ", "delta_avg", "OA"
    ));
    for (name, report) in &rows {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.4}", v));
        table.push_str(&format!(
            "{:<24} {:>8} {:>11} {:>8.4}\n",
            name,
            fmt(report.aj),
            fmt(report.delta_avg),
            report.oa
        ));
    }
    print!("{table}");
    if let Some(out) = args.out_path {
        std::fs::write(out, &table).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}
