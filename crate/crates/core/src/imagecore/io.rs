//! Image file I/O: PNG (any colour type) and binary PGM (P5).
//!
//! Colour inputs are reduced with `Y = 0.299R + 0.587G + 0.114B`, rounded
//! half-up. Writing quantizes intensities the same way.

use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use super::{quantize, GrayImage, ImageError};

pub fn load(path: &Path) -> Result<GrayImage, ImageError> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

pub fn decode(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    if bytes.starts_with(b"P5") {
        return decode_pgm(bytes);
    }
    let dynamic = image::load_from_memory(bytes).map_err(|e| ImageError::Decode(e.to_string()))?;
    from_dynamic(&dynamic)
}

fn luminance(r: u8, g: u8, b: u8) -> f64 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    (y + 0.5).floor().min(255.0)
}

fn from_dynamic(img: &DynamicImage) -> Result<GrayImage, ImageError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => GrayImage::from_bytes(w, h, buf.as_raw()),
        DynamicImage::ImageLumaA8(buf) => {
            let data: Vec<u8> = buf.pixels().map(|p| p.0[0]).collect();
            GrayImage::from_bytes(w, h, &data)
        }
        other => {
            let rgb = other.to_rgb8();
            let data = rgb.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect();
            GrayImage::new(w, h, data)
        }
    }
}

fn pgm_header_token(bytes: &[u8], pos: &mut usize) -> Result<String, ImageError> {
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
        return Err(ImageError::Decode("truncated PGM header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let mut pos = 0;
    let magic = pgm_header_token(bytes, &mut pos)?;
    if magic != "P5" {
        return Err(ImageError::Decode(format!("expected P5 magic, found {magic:?}")));
    }
    let mut field = |name: &str| -> Result<usize, ImageError> {
        pgm_header_token(bytes, &mut pos)?
            .parse::<usize>()
            .map_err(|_| ImageError::Decode(format!("bad PGM {name}")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(ImageError::Decode(format!("bad PGM maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let sample_bytes = if maxval > 255 { 2 } else { 1 };
    let needed = width * height * sample_bytes;
    let raster = bytes
        .get(pos..pos + needed)
        .ok_or_else(|| ImageError::Decode("truncated PGM raster".into()))?;
    let scale = 255.0 / maxval as f64;
    let data: Vec<f64> = if sample_bytes == 1 {
        raster.iter().map(|&b| (f64::from(b) * scale).min(255.0)).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| (f64::from(u16::from_be_bytes([c[0], c[1]])) * scale).min(255.0))
            .collect()
    };
    GrayImage::new(width, height, data)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize(v)));
    out
}

pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>, ImageError> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.to_bytes())
        .ok_or_else(|| ImageError::Decode("raster size mismatch".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| ImageError::Decode(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<(), ImageError> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

pub fn save_png(img: &GrayImage, path: &Path) -> Result<(), ImageError> {
    fs::write(path, encode_png(img)?)?;
    Ok(())
}

/// Saves by extension: `.pgm` as P5, anything else as PNG.
pub fn save(img: &GrayImage, path: &Path) -> Result<(), ImageError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => save_pgm(img, path),
        _ => save_png(img, path),
    }
}
