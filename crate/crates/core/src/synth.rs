//! Synthetic receipt corpus: receipt-like text rendered with a 5×7 bitmap
//! font, then degraded by Gaussian blur, contrast loss and sensor noise.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::imagecore::{gaussian_blur, io::save_png, GrayImage, ImageError};

const PAPER: f64 = 245.0;
const INK: f64 = 20.0;

fn glyph(c: char) -> [u8; 7] {
    match c {
        'A' => [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'B' => [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
        'C' => [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
        'D' => [0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'F' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
        'G' => [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F],
        'H' => [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'I' => [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'J' => [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C],
        'K' => [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
        'L' => [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F],
        'M' => [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
        'N' => [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11],
        'O' => [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'Q' => [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        'S' => [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E],
        'T' => [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
        'U' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'V' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04],
        'W' => [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A],
        'X' => [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11],
        'Y' => [0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04],
        'Z' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F],
        's' => [0x00, 0x00, 0x0E, 0x10, 0x0E, 0x01, 0x1E],
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        ',' => [0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08],
        ':' => [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00],
        '/' => [0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00],
        '-' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        '%' => [0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03],
        '#' => [0x0A, 0x0A, 0x1F, 0x0A, 0x1F, 0x0A, 0x0A],
        '(' => [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
        ')' => [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
        ' ' => [0; 7],
        c if c.is_lowercase() => glyph(c.to_ascii_uppercase()),
        _ => [0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F],
    }
}

/// Dark text on light paper; each font pixel becomes a `scale`×`scale`
/// block, with a one-cell margin around the text.
pub fn render_text(text: &str, scale: usize) -> GrayImage {
    let scale = scale.max(1);
    let lines: Vec<&str> = text.lines().collect();
    let cols = lines.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(1);
    let (cell_w, cell_h) = (6 * scale, 9 * scale);
    let width = (cols + 2) * cell_w;
    let height = (lines.len().max(1) + 2) * cell_h;
    let mut data = vec![PAPER; width * height];
    for (row, line) in lines.iter().enumerate() {
        for (col, c) in line.chars().enumerate() {
            let bits = glyph(c);
            let (x0, y0) = ((col + 1) * cell_w, (row + 1) * cell_h);
            for (gy, bits_row) in bits.iter().enumerate() {
                for gx in 0..5 {
                    if bits_row & (0x10 >> gx) == 0 {
                        continue;
                    }
                    for dy in 0..scale {
                        let y = y0 + gy * scale + dy;
                        let start = y * width + x0 + gx * scale;
                        data[start..start + scale].fill(INK);
                    }
                }
            }
        }
    }
    GrayImage::new(width, height, data).expect("rendered raster is valid")
}

const STORES: [&str; 6] = ["FRESH MART", "CITY GROCER", "SUNRISE CAFE", "METRO PHARMACY", "GREEN BASKET", "KOPI HOUSE"];
const ITEMS: [&str; 12] =
    ["MILK", "BREAD", "RICE 5KG", "SUGAR", "TEA", "SOAP", "EGGS", "OIL 1L", "COFFEE", "NOODLES", "APPLES", "BISCUITS"];
const MONTHS: [&str; 12] = ["JAN", "FEB", "MAR", "APR", "MAY", "JUN", "JUL", "AUG", "SEP", "OCT", "NOV", "DEC"];
const MARKERS: [&str; 4] = ["RM", "Rs.", "INR", "USD"];

fn money(cents: u64) -> String {
    format!("{}.{:02}", cents / 100, cents % 100)
}

/// A plausible receipt transcript with the five extractable fields.
pub fn receipt_text(rng: &mut impl Rng) -> String {
    let mut lines = vec![STORES[rng.random_range(0..STORES.len())].to_string()];
    let id = format!("{}-{}", (b'A' + rng.random_range(0..26u8)) as char, rng.random_range(1000..9999));
    lines.push(if rng.random_bool(0.5) { format!("INVOICE NO: {id}") } else { format!("RECEIPT #{id}") });
    let (y, m, d) = (rng.random_range(2019..=2025), rng.random_range(1..=12u32), rng.random_range(1..=28u32));
    lines.push(match rng.random_range(0..4) {
        0 => format!("DATE: {y}-{m:02}-{d:02}"),
        1 => format!("DATE: {d} {} {y}", MONTHS[m as usize - 1]),
        2 => format!("DATE: {d}.{m}.{y}"),
        _ => format!("DATE: {d:02}/{m:02}/{y}"),
    });
    let mut subtotal = 0;
    for _ in 0..rng.random_range(2..=4) {
        let qty = rng.random_range(1..=3u64);
        let price = rng.random_range(50..2000u64);
        subtotal += qty * price;
        lines.push(format!("{} {qty} X {}", ITEMS[rng.random_range(0..ITEMS.len())], money(price)));
    }
    lines.push(format!("SUBTOTAL {}", money(subtotal)));
    let mut total = subtotal;
    if rng.random_bool(0.5) {
        let pct = rng.random_range(1..=3u64) * 5;
        total -= subtotal * pct / 100;
        lines.push(format!("DISCOUNT {pct}%"));
    }
    let marker = MARKERS[rng.random_range(0..MARKERS.len())];
    let sep = if rng.random_bool(0.5) { " " } else { "" };
    lines.push(format!("TOTAL {marker}{sep}{}", money(total)));
    lines.push("THANK YOU".to_string());
    lines.join("\n")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    pub blur_sigma: f64,
    /// Multiplier on the distance from mid-gray.
    pub contrast: f64,
    pub noise_sigma: f64,
}

pub fn degrade(clean: &GrayImage, d: &Degradation, rng: &mut impl Rng) -> Result<GrayImage, ImageError> {
    let blurred = if d.blur_sigma > 0.0 {
        let size = 2 * (3.0 * d.blur_sigma).ceil() as usize + 1;
        gaussian_blur(clean, size, d.blur_sigma)?
    } else {
        clean.clone()
    };
    let noise = Normal::new(0.0, d.noise_sigma.max(0.0)).map_err(|e| ImageError::InvalidParameter(e.to_string()))?;
    let data: Vec<f64> =
        blurred.data().iter().map(|&v| 127.5 + (v - 127.5) * d.contrast + noise.sample(&mut *rng)).collect();
    Ok(GrayImage::from_fn(clean.width(), clean.height(), |x, y| data[y * clean.width() + x]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub count: usize,
    pub seed: u64,
    pub scale: usize,
    /// Relative frequency of sharp, moderately blurred and heavily blurred
    /// pages.
    pub mix: [f64; 3],
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { count: 24, seed: 7, scale: 2, mix: [0.72, 0.25, 0.03] }
    }
}

#[derive(Clone, Debug)]
pub struct SynthSample {
    pub id: String,
    pub transcript: String,
    pub clean: GrayImage,
    pub degraded: GrayImage,
    pub degradation: Degradation,
}

fn pick_degradation(rng: &mut impl Rng, mix: [f64; 3]) -> Degradation {
    let total: f64 = mix.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let r = rng.random::<f64>() * total;
    let (sigma, contrast) = if r < mix[0] {
        (rng.random_range(0.0..0.6), rng.random_range(0.85..1.0))
    } else if r < mix[0] + mix[1] {
        (rng.random_range(1.1..1.6), rng.random_range(0.75..0.95))
    } else {
        (rng.random_range(2.2..3.0), rng.random_range(0.5..0.7))
    };
    Degradation { blur_sigma: sigma, contrast, noise_sigma: rng.random_range(0.5..2.0) }
}

pub fn generate(cfg: &SynthConfig) -> Result<Vec<SynthSample>, ImageError> {
    (0..cfg.count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            let transcript = receipt_text(&mut rng);
            let clean = render_text(&transcript, cfg.scale);
            let degradation = pick_degradation(&mut rng, cfg.mix);
            let degraded = degrade(&clean, &degradation, &mut rng)?;
            Ok(SynthSample { id: format!("bill_{i:04}"), transcript, clean, degraded, degradation })
        })
        .collect()
}

/// Writes `clean/<id>.png` and `degraded/<id>.png`, each with a `<id>.txt`
/// transcript alongside.
pub fn write_corpus(samples: &[SynthSample], dir: &Path) -> Result<(), ImageError> {
    for sub in ["clean", "degraded"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    for s in samples {
        for (sub, img) in [("clean", &s.clean), ("degraded", &s.degraded)] {
            save_png(img, &dir.join(sub).join(format!("{}.png", s.id)))?;
            fs::write(dir.join(sub).join(format!("{}.txt", s.id)), &s.transcript)?;
        }
    }
    Ok(())
}
