//! `mft synth`: expand a scene description into a precomputed-flow dataset
//! with manifest, query points, and ground-truth tracks.

use std::path::Path;

use anyhow::{Context, Result};

use mft_core::flowio::{write_flo, write_map, Manifest, MapKind};
use mft_core::metrics::{GroundTruthTrack, GtTrackSet};
use mft_core::rng::derive_key;
use mft_core::synth::{corrupt, NoiseModel, SceneModel};
use mft_core::tracker::DeltaSet;
use mft_core::types::QuerySet;

use super::{DatasetMeta, QueriesFile, FILE_VERSION};

pub struct SynthArgs<'a> {
    pub scene_path: &'a Path,
    pub out_dir: &'a Path,
    pub noise_path: Option<&'a Path>,
    pub delta_set: DeltaSet,
    pub num_queries: usize,
    pub seed: u64,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let scene = SceneModel::load(args.scene_path)
        .with_context(|| format!("loading scene {}", args.scene_path.display()))?;

    // The command seed overrides any seed recorded in the noise file, so a
    // dataset is reproducible from (scene, noise shape, seed) alone. Masked
    // to 63 bits: the metadata file stores it as a TOML integer.
    let noise = match args.noise_path {
        None => None,
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading noise model {}", p.display()))?;
            let mut model = NoiseModel::from_toml_str(&text)?;
            model.seed = derive_key(&[args.seed, 0x4e015e]) & (i64::MAX as u64);
            Some(model)
        }
    };

    std::fs::create_dir_all(args.out_dir.join("pairs"))
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let manifest = Manifest::generate(
        scene.width(),
        scene.height(),
        scene.num_frames(),
        &args.delta_set,
    )?;
    for (&(src, dst), paths) in &manifest.pairs {
        let clean = scene.exact_flow(src, dst)?;
        let triplet = match &noise {
            Some(model) => corrupt(&clean, model),
            None => clean,
        };
        write_flo(&args.out_dir.join(&paths.flow), &triplet.flow)?;
        write_map(
            &args.out_dir.join(&paths.occlusion),
            &triplet.occlusion,
            MapKind::Occlusion,
        )?;
        write_map(
            &args.out_dir.join(&paths.uncertainty),
            &triplet.uncertainty,
            MapKind::Uncertainty,
        )?;
    }
    manifest.save(&args.out_dir.join("manifest.toml"))?;

    // Query points and their exact trajectories; queries are integer grid
    // positions, sampled deterministically from the seed.
    let points = scene.sample_query_points(args.num_queries, derive_key(&[args.seed, 0x9e6]));
    let queries = QuerySet::new(scene.width(), scene.height(), points.clone())?;
    QueriesFile::save(&args.out_dir.join("queries.toml"), &queries)?;

    let tracks: Vec<GroundTruthTrack> = points
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let mut positions = Vec::with_capacity(scene.num_frames());
            let mut visible = Vec::with_capacity(scene.num_frames());
            for t in 0..scene.num_frames() {
                let (p, v) = scene.point_state(q, t)?;
                positions.push(p);
                visible.push(v);
            }
            GroundTruthTrack::new(i as u32, positions, visible)
        })
        .collect::<mft_core::Result<_>>()?;
    GtTrackSet {
        width: scene.width(),
        height: scene.height(),
        num_frames: scene.num_frames(),
        tracks,
    }
    .save(&args.out_dir.join("gt_tracks.toml"))?;

    // Expanded scene copy plus metadata for reproducibility.
    scene.save(&args.out_dir.join("scene.toml"))?;
    DatasetMeta {
        version: FILE_VERSION,
        seed: args.seed,
        deltas: args.delta_set.to_string(),
        scene: "scene.toml".into(),
        manifest: "manifest.toml".into(),
        queries: "queries.toml".into(),
        gt_tracks: "gt_tracks.toml".into(),
        noise,
    }
    .save(args.out_dir)?;

    println!(
        "dataset: {} frames, {} stored pairs, {} queries -> {}",
        scene.num_frames(),
        manifest.pairs.len(),
        args.num_queries,
        args.out_dir.display()
    );
    Ok(())
}
