//! Binary PPM (P6) image i/o, sky masks, and masked pixel extraction.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRgb {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[u8; 3]>,
}

impl ImageRgb {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, pixels: vec![[0, 0, 0]; (width * height) as usize] }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        self.pixels[(y * self.width + x) as usize] = rgb;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    None,
    Circular,
}

/// Visibility mask over an image; circular masks keep the sky disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkyMask {
    pub width: u32,
    pub height: u32,
    pub kind: MaskKind,
    pub center_x: u32,
    pub center_y: u32,
    pub radius: u32,
}

impl SkyMask {
    pub fn none(width: u32, height: u32) -> Self {
        Self { width, height, kind: MaskKind::None, center_x: 0, center_y: 0, radius: 0 }
    }

    pub fn circular(width: u32, height: u32, center_x: u32, center_y: u32, radius: u32) -> Self {
        Self { width, height, kind: MaskKind::Circular, center_x, center_y, radius }
    }

    /// Centered disk of radius min(w, h)/2.
    pub fn default_circular(width: u32, height: u32) -> Self {
        Self::circular(width, height, width / 2, height / 2, width.min(height) / 2)
    }

    #[inline]
    pub fn is_visible(&self, x: u32, y: u32) -> bool {
        match self.kind {
            MaskKind::None => true,
            MaskKind::Circular => {
                let dx = x as i64 - self.center_x as i64;
                let dy = y as i64 - self.center_y as i64;
                dx * dx + dy * dy <= (self.radius as i64) * (self.radius as i64)
            }
        }
    }

    pub fn visible_count(&self) -> usize {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.is_visible(x, y))
            .count()
    }
}

/// The visible pixels of an image under a mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedPixelSet {
    pub positions: Vec<(u32, u32)>,
    pub colors: Vec<[u8; 3]>,
}

impl MaskedPixelSet {
    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }
}

fn read_header_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    // skip whitespace and '#' comments
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader("unexpected end of header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_dim(token: &str) -> Result<u32> {
    token
        .parse::<u32>()
        .map_err(|_| Error::MalformedHeader(format!("non-numeric header field '{token}'")))
}

pub fn parse_ppm(bytes: &[u8]) -> Result<ImageRgb> {
    if bytes.len() < 2 || &bytes[0..2] != b"P6" {
        return Err(Error::MalformedHeader("missing P6 magic".into()));
    }
    let mut pos = 2;
    let width = parse_dim(&read_header_token(bytes, &mut pos)?)?;
    let height = parse_dim(&read_header_token(bytes, &mut pos)?)?;
    let maxval = parse_dim(&read_header_token(bytes, &mut pos)?)?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    // exactly one whitespace byte separates header from payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::MalformedHeader("missing separator after maxval".into()));
    }
    pos += 1;
    let expected = width as usize * height as usize * 3;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPixelData { expected, got: payload.len() });
    }
    let pixels = payload[..expected]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Ok(ImageRgb { width, height, pixels })
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<ImageRgb> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    parse_ppm(&bytes)
}

pub fn encode_ppm(image: &ImageRgb) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.reserve(image.pixels.len() * 3);
    for p in &image.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn store_ppm(image: &ImageRgb, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_ppm(image))?;
    w.flush()?;
    Ok(())
}

pub fn apply_mask(image: &ImageRgb, mask: &SkyMask) -> Result<MaskedPixelSet> {
    if mask.width != image.width || mask.height != image.height {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} vs image {}x{}",
            mask.width, mask.height, image.width, image.height
        )));
    }
    let mut positions = Vec::new();
    let mut colors = Vec::new();
    for y in 0..image.height {
        for x in 0..image.width {
            if mask.is_visible(x, y) {
                positions.push((x, y));
                colors.push(image.get(x, y));
            }
        }
    }
    Ok(MaskedPixelSet { positions, colors })
}
