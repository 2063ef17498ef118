pub mod ablate;
pub mod eval;
pub mod synth;
pub mod track;
pub mod visualize;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use mft_core::metrics::Rescale;
use mft_core::synth::NoiseModel;
use mft_core::types::{QuerySet, Vec2};

pub const FILE_VERSION: u32 = 1;

/// Query points on the reference frame, as written by `synth` and consumed
/// by `track`.
#[derive(Debug, Serialize, Deserialize)]
pub struct QueriesFile {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub points: Vec<[f32; 2]>,
}

impl QueriesFile {
    pub fn load(path: &Path) -> Result<QuerySet> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading queries {}", path.display()))?;
        let file: QueriesFile =
            toml::from_str(&text).with_context(|| format!("parsing queries {}", path.display()))?;
        if file.version != FILE_VERSION {
            bail!(
                "{}: unsupported queries version {}",
                path.display(),
                file.version
            );
        }
        let points = file.points.iter().map(|p| Vec2::new(p[0], p[1])).collect();
        QuerySet::new(file.width, file.height, points)
            .map_err(|e| anyhow!("{}: {e}", path.display()))
    }

    pub fn save(path: &Path, queries: &QuerySet) -> Result<()> {
        let file = QueriesFile {
            version: FILE_VERSION,
            width: queries.width(),
            height: queries.height(),
            points: queries.points().iter().map(|p| [p.x, p.y]).collect(),
        };
        std::fs::write(path, toml::to_string(&file)?)
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Dataset metadata written next to the manifest by `synth`; `ablate` uses
/// the recorded scene and noise to rebuild the synthetic provider for delta
/// sets containing `inf`, which file-backed providers cannot serve.
#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub version: u32,
    pub seed: u64,
    pub deltas: String,
    pub scene: String,
    pub manifest: String,
    pub queries: String,
    pub gt_tracks: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
}

impl DatasetMeta {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("meta.toml");
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading dataset metadata {}", path.display()))?;
        let meta: DatasetMeta = toml::from_str(&text)
            .with_context(|| format!("parsing dataset metadata {}", path.display()))?;
        if meta.version != FILE_VERSION {
            bail!(
                "{}: unsupported metadata version {}",
                path.display(),
                meta.version
            );
        }
        Ok(meta)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join("meta.toml");
        std::fs::write(&path, toml::to_string(self)?)
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Parses `WxH:WxH` into a rescale pair (tracking resolution : evaluation
/// resolution).
pub fn parse_rescale(text: &str) -> Result<Rescale> {
    let err = || anyhow!("--rescale expects WxH:WxH, got {text:?}");
    let (from, to) = text.split_once(':').ok_or_else(err)?;
    let parse_dims = |s: &str| -> Result<(usize, usize)> {
        let (w, h) = s.split_once('x').ok_or_else(err)?;
        Ok((
            w.trim().parse().map_err(|_| err())?,
            h.trim().parse().map_err(|_| err())?,
        ))
    };
    Ok(Rescale {
        from: parse_dims(from)?,
        to: parse_dims(to)?,
    })
}

/// Zero-padded per-frame file stems used by `--save-fou` and `visualize`.
pub fn fou_paths(dir: &Path, frame: usize) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(format!("{frame:06}.flo")),
        dir.join(format!("{frame:06}.occ.mftm")),
        dir.join(format!("{frame:06}.unc.mftm")),
    )
}
