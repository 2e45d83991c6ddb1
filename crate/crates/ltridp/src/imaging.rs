//! Grayscale image carrier plus PGM/PNG decoding, luma reduction and
//! bilinear resizing.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Format(format!(
                "pixel buffer length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Rounds a non-negative value half-up to the nearest integer.
#[inline]
pub(crate) fn round_half_up(v: f64) -> u8 {
    let r = (v + 0.5).floor();
    r.clamp(0.0, 255.0) as u8
}

/// Luma reduction with 0.299/0.587/0.114 weights, round-half-up.
pub fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000) as u8
}

/// Loads a binary PGM (P5, maxval 255) or an 8-bit PNG (gray or RGB).
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let mut file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;

    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes)
    } else {
        Err(Error::Format(format!(
            "{}: not a P5 PGM or PNG file",
            path.display()
        )))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 2usize; // past "P5"
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = read_pgm_field(bytes, &mut pos)?;
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(Error::Format(format!("PGM maxval {maxval}, expected 255")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width * height;
    if bytes.len() < pos + n {
        return Err(Error::Format("PGM raster truncated".into()));
    }
    GrayImage::new(width, height, bytes[pos..pos + n].to_vec())
}

fn read_pgm_field(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    // Skip whitespace and '#' comments.
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            Some(_) => break,
            None => return Err(Error::Format("PGM header truncated".into())),
        }
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("malformed PGM header field".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .unwrap()
        .parse()
        .map_err(|_| Error::Format("PGM header field overflow".into()))
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Format(format!("PNG decode failed: {e}")))?;
    match decoded {
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            GrayImage::new(w as usize, h as usize, img.into_raw())
        }
        image::DynamicImage::ImageRgb8(img) => {
            let (w, h) = img.dimensions();
            let data = img
                .pixels()
                .map(|p| to_grayscale(p.0[0], p.0[1], p.0[2]))
                .collect();
            GrayImage::new(w as usize, h as usize, data)
        }
        other => Err(Error::Format(format!(
            "unsupported PNG color type {:?}, expected 8-bit gray or RGB",
            other.color()
        ))),
    }
}

/// Writes the image as a binary P5 PGM.
pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
        out.write_all(img.data())
    };
    write(&mut out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Bilinear resize with half-pixel-center mapping and edge clamping.
pub fn resize_bilinear(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w < 3 || out_h < 3 {
        return Err(Error::ImageSize {
            width: out_w,
            height: out_h,
            min: 3,
        });
    }
    if out_w == img.width() && out_h == img.height() {
        return Ok(img.clone());
    }

    let scale_x = img.width() as f64 / out_w as f64;
    let scale_y = img.height() as f64 / out_h as f64;
    let mut data = Vec::with_capacity(out_w * out_h);
    for oy in 0..out_h {
        let sy = ((oy as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (img.height() - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(img.height() - 1);
        let fy = sy - y0 as f64;
        for ox in 0..out_w {
            let sx = ((ox as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (img.width() - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(img.width() - 1);
            let fx = sx - x0 as f64;
            let top = img.get(x0, y0) as f64 * (1.0 - fx) + img.get(x1, y0) as f64 * fx;
            let bottom = img.get(x0, y1) as f64 * (1.0 - fx) + img.get(x1, y1) as f64 * fx;
            data.push(round_half_up(top * (1.0 - fy) + bottom * fy));
        }
    }
    GrayImage::new(out_w, out_h, data)
}
