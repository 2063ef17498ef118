//! `mft visualize`: warp the reference frame onto each current frame through
//! the tracked flow, masked with a checkerboard, and darken current-frame
//! pixels that no reference pixel maps to. Misalignment of the checkerboard
//! against the underlying image exposes tracking errors.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use mft_core::flowio::{read_flo, read_map, MapKind};

use crate::ppm::{read_ppm, write_ppm, RgbImage};

pub struct VisualizeArgs<'a> {
    pub frames_dir: &'a Path,
    pub fou_dir: &'a Path,
    pub out_dir: &'a Path,
    pub cell_size: usize,
    pub theta_o: f32,
    pub darken: f32,
}

fn indexed_files(dir: &Path, suffix: &str) -> Result<BTreeMap<usize, std::path::PathBuf>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) => n,
            None => continue,
        };
        if let Some(stem) = name.strip_suffix(suffix) {
            if let Ok(idx) = stem.parse::<usize>() {
                files.insert(idx, path);
            }
        }
    }
    Ok(files)
}

pub fn run(args: &VisualizeArgs) -> Result<()> {
    if args.cell_size == 0 {
        bail!("checkerboard cell size must be positive");
    }
    let frames = indexed_files(args.frames_dir, ".ppm")?;
    let flows = indexed_files(args.fou_dir, ".flo")?;
    if frames.is_empty() {
        bail!("no .ppm frames in {}", args.frames_dir.display());
    }
    if flows.is_empty() {
        bail!("no .flo results in {}", args.fou_dir.display());
    }

    let &ref_index = frames.keys().next().unwrap();
    let reference = read_ppm(&frames[&ref_index])?;
    std::fs::create_dir_all(args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    for (&t, flow_path) in &flows {
        let frame_path = frames
            .get(&t)
            .with_context(|| format!("missing frame image for result {t:06}"))?;
        let current = read_ppm(frame_path)?;
        if current.width != reference.width || current.height != reference.height {
            bail!("frame {t:06} size differs from the reference frame");
        }
        let flow = read_flo(flow_path)?;
        let occlusion = read_map(
            &args.fou_dir.join(format!("{t:06}.occ.mftm")),
            MapKind::Occlusion,
        )?;
        if flow.width() != reference.width || flow.height() != reference.height {
            bail!("result {t:06} grid differs from the frame size");
        }

        let out = overlay(
            &reference,
            &current,
            &flow,
            &occlusion,
            args.cell_size,
            args.theta_o,
            args.darken,
        );
        write_ppm(&args.out_dir.join(format!("{t:06}.ppm")), &out)?;
    }
    println!(
        "wrote {} overlay frames to {}",
        flows.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn overlay(
    reference: &RgbImage,
    current: &RgbImage,
    flow: &mft_core::FlowField,
    occlusion: &mft_core::ScalarMap,
    cell: usize,
    theta_o: f32,
    darken: f32,
) -> RgbImage {
    let (w, h) = (reference.width, reference.height);
    let mut out = current.clone();
    let mut covered = vec![false; w * h];

    for y in 0..h {
        for x in 0..w {
            // Occluded reference pixels have no correspondence.
            if occlusion.get(x, y) > theta_o {
                continue;
            }
            let d = flow.get(x, y);
            let tx = (x as f32 + d.x).round();
            let ty = (y as f32 + d.y).round();
            if tx < 0.0 || ty < 0.0 || tx > (w - 1) as f32 || ty > (h - 1) as f32 {
                continue;
            }
            let (tx, ty) = (tx as usize, ty as usize);
            covered[ty * w + tx] = true;
            let opaque = (x / cell + y / cell) % 2 == 0;
            if opaque {
                out.set(tx, ty, reference.get(x, y));
            }
        }
    }

    for y in 0..h {
        for x in 0..w {
            if !covered[y * w + x] {
                let [r, g, b] = out.get(x, y);
                out.set(
                    x,
                    y,
                    [
                        (r as f32 * darken) as u8,
                        (g as f32 * darken) as u8,
                        (b as f32 * darken) as u8,
                    ],
                );
            }
        }
    }
    out
}
