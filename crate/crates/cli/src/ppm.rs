//! Binary PPM (P6) images: the one raster format the toolchain speaks, so
//! visualization needs no codec dependencies.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB bytes, 3 per pixel.
    pub data: Vec<u8>,
}

impl RgbImage {
    #[allow(dead_code)] // constructor for tests; production images come from files
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

fn read_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    // Skip whitespace and '#' comments.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        bail!("unexpected end of header");
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .with_context(|| format!("reading {}", path.display()))?;
    let mut pos = 0;
    let magic = read_token(&bytes, &mut pos)?;
    if magic != "P6" {
        bail!("{}: not a binary PPM (magic {magic:?})", path.display());
    }
    let width: usize = read_token(&bytes, &mut pos)?.parse().context("width")?;
    let height: usize = read_token(&bytes, &mut pos)?.parse().context("height")?;
    let maxval: usize = read_token(&bytes, &mut pos)?.parse().context("maxval")?;
    if maxval != 255 {
        bail!("{}: unsupported maxval {maxval}", path.display());
    }
    if width == 0 || height == 0 || width > 1 << 16 || height > 1 << 16 {
        bail!(
            "{}: implausible dimensions {width}x{height}",
            path.display()
        );
    }
    pos += 1; // single whitespace after maxval
    let expected = width * height * 3;
    if bytes.len() < pos + expected {
        bail!("{}: truncated pixel data", path.display());
    }
    Ok(RgbImage {
        width,
        height,
        data: bytes[pos..pos + expected].to_vec(),
    })
}

pub fn write_ppm(path: &Path, image: &RgbImage) -> Result<()> {
    let mut f =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write!(f, "P6\n{} {}\n255\n", image.width, image.height)?;
    f.write_all(&image.data)?;
    Ok(())
}
