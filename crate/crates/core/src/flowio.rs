//! Bit-exact serialization of flow fields and scalar maps, dataset manifests,
//! and the precomputed-flow provider.
//!
//! Flow fields use the Middlebury layout: the magic float `202021.25`, then
//! width and height as little-endian i32, then row-major interleaved (dx, dy)
//! little-endian f32. Scalar maps have no standard format, so they get a
//! dedicated one: ASCII magic `MFTM`, one kind byte (0 = occlusion,
//! 1 = uncertainty), i32 dimensions, then the values. Everything is
//! little-endian regardless of host. Headers are fully validated against the
//! file size before any payload buffer is allocated.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tracker::{DeltaSet, FlowProvider};
use crate::types::{FlowField, FouTriplet, ScalarMap, Vec2};

pub const FLO_MAGIC: f32 = 202021.25;
pub const MAP_MAGIC: [u8; 4] = *b"MFTM";
pub const MANIFEST_VERSION: u32 = 1;
const MAX_DIM: i32 = 1 << 16;

/// Kind tag of a scalar-map file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Occlusion,
    Uncertainty,
}

impl MapKind {
    fn tag(self) -> u8 {
        match self {
            MapKind::Occlusion => 0,
            MapKind::Uncertainty => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            MapKind::Occlusion => "occlusion",
            MapKind::Uncertainty => "uncertainty",
        }
    }
}

fn read_exact(path: &Path, reader: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    reader.read_exact(buf).map_err(|_| Error::Truncated {
        path: path.to_path_buf(),
        reason: format!("while reading {what}"),
    })
}

fn validate_dims(path: &Path, width: i32, height: i32) -> Result<(usize, usize)> {
    if width <= 0 || height <= 0 || width > MAX_DIM || height > MAX_DIM {
        return Err(Error::BadFileDimensions {
            path: path.to_path_buf(),
            width,
            height,
        });
    }
    Ok((width as usize, height as usize))
}

fn expect_file_len(path: &Path, file: &File, expected: u64) -> Result<()> {
    let actual = file.metadata().map_err(|e| Error::io(path, e))?.len();
    if actual != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            reason: format!("file is {actual} bytes, layout requires {expected}"),
        });
    }
    Ok(())
}

/// Writes a flow field in the Middlebury-compatible layout.
pub fn write_flo(path: &Path, field: &FlowField) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(&FLO_MAGIC.to_le_bytes()).map_err(io)?;
    w.write_all(&(field.width() as i32).to_le_bytes())
        .map_err(io)?;
    w.write_all(&(field.height() as i32).to_le_bytes())
        .map_err(io)?;
    for v in field.data() {
        w.write_all(&v.x.to_le_bytes()).map_err(io)?;
        w.write_all(&v.y.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a flow field, validating magic, dimensions, and the exact file size.
pub fn read_flo(path: &Path) -> Result<FlowField> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(&file);

    let mut header = [0u8; 12];
    read_exact(path, &mut reader, &mut header, "flo header")?;
    let magic = f32::from_le_bytes(header[0..4].try_into().unwrap());
    if magic.to_le_bytes() != FLO_MAGIC.to_le_bytes() {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let width = i32::from_le_bytes(header[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(header[8..12].try_into().unwrap());
    let (w, h) = validate_dims(path, width, height)?;
    expect_file_len(path, &file, 12 + (w * h * 8) as u64)?;

    let mut payload = vec![0u8; w * h * 8];
    read_exact(path, &mut reader, &mut payload, "flo payload")?;
    let data: Vec<Vec2> = payload
        .chunks_exact(8)
        .map(|c| {
            Vec2::new(
                f32::from_le_bytes(c[0..4].try_into().unwrap()),
                f32::from_le_bytes(c[4..8].try_into().unwrap()),
            )
        })
        .collect();
    FlowField::new(w, h, data)
}

/// Writes a scalar map with its kind tag.
pub fn write_map(path: &Path, map: &ScalarMap, kind: MapKind) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(&MAP_MAGIC).map_err(io)?;
    w.write_all(&[kind.tag()]).map_err(io)?;
    w.write_all(&(map.width() as i32).to_le_bytes())
        .map_err(io)?;
    w.write_all(&(map.height() as i32).to_le_bytes())
        .map_err(io)?;
    for v in map.data() {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a scalar map of any kind, returning the stored tag.
pub fn read_map_any(path: &Path) -> Result<(ScalarMap, MapKind)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(&file);

    let mut header = [0u8; 13];
    read_exact(path, &mut reader, &mut header, "map header")?;
    if header[0..4] != MAP_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let kind = match header[4] {
        0 => MapKind::Occlusion,
        1 => MapKind::Uncertainty,
        other => {
            return Err(Error::KindMismatch {
                path: path.to_path_buf(),
                expected: "occlusion or uncertainty",
                found: format!("tag {other}"),
            })
        }
    };
    let width = i32::from_le_bytes(header[5..9].try_into().unwrap());
    let height = i32::from_le_bytes(header[9..13].try_into().unwrap());
    let (w, h) = validate_dims(path, width, height)?;
    expect_file_len(path, &file, 13 + (w * h * 4) as u64)?;

    let mut payload = vec![0u8; w * h * 4];
    read_exact(path, &mut reader, &mut payload, "map payload")?;
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((ScalarMap::new(w, h, data)?, kind))
}

/// Reads a scalar map, failing when the stored kind differs from `kind`.
pub fn read_map(path: &Path, kind: MapKind) -> Result<ScalarMap> {
    let (map, found) = read_map_any(path)?;
    if found != kind {
        return Err(Error::KindMismatch {
            path: path.to_path_buf(),
            expected: kind.name(),
            found: found.name().to_string(),
        });
    }
    Ok(map)
}

// --- manifest ----------------------------------------------------------------

/// File-path triple for one precomputed frame pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletPaths {
    pub flow: String,
    pub occlusion: String,
    pub uncertainty: String,
}

/// Index of a precomputed-flow dataset: grid dimensions, frame count, the
/// integer delta set, and the file triple for each stored pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub deltas: Vec<u32>,
    pub pairs: BTreeMap<(usize, usize), TripletPaths>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    version: u32,
    width: usize,
    height: usize,
    num_frames: usize,
    deltas: Vec<u32>,
    pairs: BTreeMap<String, TripletPaths>,
}

fn parse_pair_key(key: &str) -> Result<(usize, usize)> {
    let mut it = key.split('-');
    let (a, b) = (it.next(), it.next());
    match (a, b, it.next()) {
        (Some(a), Some(b), None) => {
            let src = a.parse().map_err(|_| Error::Manifest {
                reason: format!("bad pair key {key:?}"),
            })?;
            let dst = b.parse().map_err(|_| Error::Manifest {
                reason: format!("bad pair key {key:?}"),
            })?;
            Ok((src, dst))
        }
        _ => Err(Error::Manifest {
            reason: format!("bad pair key {key:?} (expected \"src-dst\")"),
        }),
    }
}

/// The frame pairs a tracker run can request from a precomputed dataset:
/// for every target frame, the deduplicated clamped sources `max(0, t - d)`
/// of a run from frame 0, plus the mirrored pairs for a backward run from
/// the last frame. Each required pair appears exactly once per direction.
pub fn required_pairs(num_frames: usize, delta_set: &DeltaSet) -> Result<BTreeSet<(usize, usize)>> {
    if delta_set.contains_inf() {
        return Err(Error::InfNotPrecomputable);
    }
    let deltas = delta_set.integer_deltas();
    let mut pairs = BTreeSet::new();
    for t in 1..num_frames {
        let mut sources: Vec<usize> = Vec::new();
        for &d in &deltas {
            let s = t.saturating_sub(d as usize);
            if !sources.contains(&s) {
                sources.push(s);
            }
        }
        for s in sources {
            pairs.insert((s, t));
            pairs.insert((num_frames - 1 - s, num_frames - 1 - t));
        }
    }
    Ok(pairs)
}

impl Manifest {
    /// Builds a manifest skeleton for `(num_frames, deltas)` with
    /// conventionally named relative paths. Rejects delta sets containing
    /// `inf`: direct reference-to-current flows would need storage quadratic
    /// in the frame count.
    pub fn generate(
        width: usize,
        height: usize,
        num_frames: usize,
        delta_set: &DeltaSet,
    ) -> Result<Manifest> {
        let pairs = required_pairs(num_frames, delta_set)?;
        let mut map = BTreeMap::new();
        for (src, dst) in pairs {
            map.insert(
                (src, dst),
                TripletPaths {
                    flow: format!("pairs/{src:06}_{dst:06}.flo"),
                    occlusion: format!("pairs/{src:06}_{dst:06}.occ.mftm"),
                    uncertainty: format!("pairs/{src:06}_{dst:06}.unc.mftm"),
                },
            );
        }
        Ok(Manifest {
            width,
            height,
            num_frames,
            deltas: delta_set.integer_deltas(),
            pairs: map,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ManifestFile = toml::from_str(text).map_err(|e| Error::Manifest {
            reason: format!("cannot parse manifest: {e}"),
        })?;
        if file.version != MANIFEST_VERSION {
            return Err(Error::Manifest {
                reason: format!(
                    "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                    file.version
                ),
            });
        }
        let mut pairs = BTreeMap::new();
        for (key, paths) in file.pairs {
            pairs.insert(parse_pair_key(&key)?, paths);
        }
        Ok(Manifest {
            width: file.width,
            height: file.height,
            num_frames: file.num_frames,
            deltas: file.deltas,
            pairs,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let file = ManifestFile {
            version: MANIFEST_VERSION,
            width: self.width,
            height: self.height,
            num_frames: self.num_frames,
            deltas: self.deltas.clone(),
            pairs: self
                .pairs
                .iter()
                .map(|((s, d), p)| (format!("{s}-{d}"), p.clone()))
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::Manifest {
            reason: format!("cannot serialize manifest: {e}"),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }
}

// --- provider ------------------------------------------------------------------

/// Flow provider backed by a manifest on disk, with an in-memory cache.
/// Same-frame requests return the identity triplet without touching disk.
pub struct PrecomputedProvider {
    root: PathBuf,
    manifest: Manifest,
    cache: Mutex<HashMap<(usize, usize), Arc<FouTriplet>>>,
}

impl PrecomputedProvider {
    /// Opens a dataset from its manifest path; file paths are resolved
    /// relative to the manifest's directory.
    pub fn open(manifest_path: &Path) -> Result<Self> {
        let manifest = Manifest::load(manifest_path)?;
        let root = manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf();
        Ok(PrecomputedProvider {
            root,
            manifest,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn from_manifest(root: PathBuf, manifest: Manifest) -> Self {
        PrecomputedProvider {
            root,
            manifest,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn load_pair(&self, src: usize, dst: usize) -> Result<FouTriplet> {
        let paths = self
            .manifest
            .pairs
            .get(&(src, dst))
            .ok_or(Error::MissingPair { src, dst })?;
        let flow = read_flo(&self.root.join(&paths.flow))?;
        let occlusion = read_map(&self.root.join(&paths.occlusion), MapKind::Occlusion)?;
        let uncertainty = read_map(&self.root.join(&paths.uncertainty), MapKind::Uncertainty)?;
        if flow.width() != self.manifest.width || flow.height() != self.manifest.height {
            return Err(Error::Manifest {
                reason: format!(
                    "pair ({src}, {dst}) has grid {}x{}, manifest declares {}x{}",
                    flow.width(),
                    flow.height(),
                    self.manifest.width,
                    self.manifest.height
                ),
            });
        }
        FouTriplet::new(flow, occlusion, uncertainty, src, dst)
    }
}

impl FlowProvider for PrecomputedProvider {
    fn get(&self, src: usize, dst: usize) -> Result<Arc<FouTriplet>> {
        if src == dst {
            let mut cache = self.cache.lock().unwrap();
            if let Some(t) = cache.get(&(src, dst)) {
                return Ok(Arc::clone(t));
            }
            let id = Arc::new(FouTriplet::identity(
                self.manifest.width,
                self.manifest.height,
                src,
            )?);
            cache.insert((src, dst), Arc::clone(&id));
            return Ok(id);
        }

        if let Some(t) = self.cache.lock().unwrap().get(&(src, dst)) {
            return Ok(Arc::clone(t));
        }
        let loaded = self.load_pair(src, dst).map_err(|e| match e {
            missing @ Error::MissingPair { .. } => missing,
            other => Error::Provider {
                src,
                dst,
                message: other.to_string(),
            },
        })?;
        let arc = Arc::new(loaded);
        self.cache
            .lock()
            .unwrap()
            .insert((src, dst), Arc::clone(&arc));
        Ok(arc)
    }
}

/// Flow provider computing triplets from a synthetic scene, optionally
/// corrupted by a noise model. Serves any frame pair, including direct
/// reference-to-current flows.
pub struct SyntheticProvider {
    scene: crate::synth::SceneModel,
    noise: Option<crate::synth::NoiseModel>,
    cache: Mutex<HashMap<(usize, usize), Arc<FouTriplet>>>,
}

impl SyntheticProvider {
    pub fn new(scene: crate::synth::SceneModel, noise: Option<crate::synth::NoiseModel>) -> Self {
        SyntheticProvider {
            scene,
            noise,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn scene(&self) -> &crate::synth::SceneModel {
        &self.scene
    }
}

impl FlowProvider for SyntheticProvider {
    fn get(&self, src: usize, dst: usize) -> Result<Arc<FouTriplet>> {
        if let Some(t) = self.cache.lock().unwrap().get(&(src, dst)) {
            return Ok(Arc::clone(t));
        }
        let triplet = if src == dst {
            FouTriplet::identity(self.scene.width(), self.scene.height(), src)?
        } else {
            let clean = self
                .scene
                .exact_flow(src, dst)
                .map_err(|e| Error::Provider {
                    src,
                    dst,
                    message: e.to_string(),
                })?;
            match &self.noise {
                Some(noise) => crate::synth::corrupt(&clean, noise),
                None => clean,
            }
        };
        let arc = Arc::new(triplet);
        self.cache
            .lock()
            .unwrap()
            .insert((src, dst), Arc::clone(&arc));
        Ok(arc)
    }
}
