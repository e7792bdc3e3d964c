use super::{GrayImage, ImageError, MAX_INTENSITY};

const BINS: usize = 256;

/// Pixel ranges `[start, end)` of each tile along one axis when `len` pixels
/// are split into `tiles` nearly equal parts.
pub fn clahe_tile_bounds(len: usize, tiles: usize) -> Vec<(usize, usize)> {
    (0..tiles).map(|i| (i * len / tiles, (i + 1) * len / tiles)).collect()
}

#[inline]
fn bin_of(v: f64) -> usize {
    ((v + 0.5).floor() as usize).min(BINS - 1)
}

/// Clipped-histogram CDF mapping for one tile.
fn tile_lut(img: &GrayImage, xs: (usize, usize), ys: (usize, usize), clip_limit: f64) -> [f64; BINS] {
    let mut hist = [0.0f64; BINS];
    for y in ys.0..ys.1 {
        for x in xs.0..xs.1 {
            hist[bin_of(img.get(x, y))] += 1.0;
        }
    }
    let area = ((xs.1 - xs.0) * (ys.1 - ys.0)) as f64;
    let clip = (clip_limit * area / BINS as f64).max(1.0);
    let mut excess = 0.0;
    for h in &mut hist {
        if *h > clip {
            excess += *h - clip;
            *h = clip;
        }
    }
    let share = excess / BINS as f64;
    let mut lut = [0.0; BINS];
    let mut cdf = 0.0;
    for (b, h) in hist.iter().enumerate() {
        cdf += h + share;
        lut[b] = (cdf * MAX_INTENSITY / area).min(MAX_INTENSITY);
    }
    lut
}

/// Interpolation position of `p` between tile centres: the lower tile index,
/// the upper tile index and the weight of the upper one.
fn locate(p: usize, centres: &[f64]) -> (usize, usize, f64) {
    let p = p as f64;
    let last = centres.len() - 1;
    if p <= centres[0] {
        return (0, 0, 0.0);
    }
    if p >= centres[last] {
        return (last, last, 0.0);
    }
    let i = centres.iter().rposition(|&c| c <= p).unwrap_or(0);
    let w = (p - centres[i]) / (centres[i + 1] - centres[i]);
    (i, i + 1, w)
}

/// Contrast-limited adaptive histogram equalization.
///
/// `tiles` is the tile grid `(columns, rows)`; each tile gets its own clipped
/// histogram CDF and pixels are bilinearly interpolated between the mappings
/// of the four nearest tile centres.
pub fn clahe(img: &GrayImage, clip_limit: f64, tiles: (usize, usize)) -> Result<GrayImage, ImageError> {
    let (tx, ty) = tiles;
    if tx == 0 || ty == 0 {
        return Err(ImageError::InvalidParameter("CLAHE tile grid must be at least 1x1".into()));
    }
    if tx > img.width() || ty > img.height() {
        return Err(ImageError::InvalidParameter(format!(
            "CLAHE tile grid {tx}x{ty} exceeds image {}x{}",
            img.width(),
            img.height()
        )));
    }
    if !(clip_limit > 0.0) {
        return Err(ImageError::InvalidParameter(format!("clip limit {clip_limit} must be positive")));
    }
    let xb = clahe_tile_bounds(img.width(), tx);
    let yb = clahe_tile_bounds(img.height(), ty);
    let luts: Vec<[f64; BINS]> = yb
        .iter()
        .flat_map(|&ys| xb.iter().map(move |&xs| (xs, ys)))
        .map(|(xs, ys)| tile_lut(img, xs, ys, clip_limit))
        .collect();
    let centre = |b: &(usize, usize)| (b.0 + b.1 - 1) as f64 / 2.0;
    let xc: Vec<f64> = xb.iter().map(centre).collect();
    let yc: Vec<f64> = yb.iter().map(centre).collect();

    let mut out = Vec::with_capacity(img.len());
    for y in 0..img.height() {
        let (y0, y1, wy) = locate(y, &yc);
        for x in 0..img.width() {
            let (x0, x1, wx) = locate(x, &xc);
            let b = bin_of(img.get(x, y));
            let top = luts[y0 * tx + x0][b] * (1.0 - wx) + luts[y0 * tx + x1][b] * wx;
            let bottom = luts[y1 * tx + x0][b] * (1.0 - wx) + luts[y1 * tx + x1][b] * wx;
            out.push(top * (1.0 - wy) + bottom * wy);
        }
    }
    Ok(GrayImage::from_raw_clamped(img.width(), img.height(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference per-tile mapping written directly from the definition:
    /// histogram, clip at max(1, limit·area/256), spread the excess evenly,
    /// cumulative sum scaled to 255.
    fn reference_lut(values: &[u8], clip_limit: f64) -> Vec<f64> {
        let area = values.len() as f64;
        let mut hist = vec![0.0; 256];
        for &v in values {
            hist[v as usize] += 1.0;
        }
        let clip = f64::max(1.0, clip_limit * area / 256.0);
        let excess: f64 = hist.iter().map(|&h: &f64| (h - clip).max(0.0)).sum();
        let clipped: Vec<f64> = hist.iter().map(|&h: &f64| h.min(clip) + excess / 256.0).collect();
        let mut running = 0.0;
        clipped
            .iter()
            .map(|h| {
                running += h;
                (running * 255.0 / area).min(255.0)
            })
            .collect()
    }

    fn two_tile_image() -> GrayImage {
        // Left half: dark ramp; right half: bright noise-like pattern.
        GrayImage::from_fn(16, 16, |x, y| {
            if x < 8 {
                (x * 4 + y * 3) as f64
            } else {
                (150 + (x * 13 + y * 29) % 100) as f64
            }
        })
    }

    #[test]
    fn preserves_dimensions_and_range() {
        let img = two_tile_image();
        let out = clahe(&img, 2.0, (2, 2)).unwrap();
        assert!(out.same_dims(&img));
        assert!(out.data().iter().all(|v| (0.0..=255.0).contains(v)));
    }

    #[test]
    fn rejects_oversized_grid_and_bad_clip() {
        let img = GrayImage::filled(4, 4, 10.0);
        assert!(clahe(&img, 2.0, (5, 1)).is_err());
        assert!(clahe(&img, 2.0, (0, 1)).is_err());
        assert!(clahe(&img, 0.0, (2, 2)).is_err());
    }

    #[test]
    fn tile_mapping_matches_reference_and_is_monotone() {
        let img = two_tile_image();
        let out = clahe(&img, 2.0, (2, 1)).unwrap();
        let bytes = img.to_bytes();
        for (tile, xs) in [(0usize, 0..8usize), (1, 8..16)].into_iter() {
            let values: Vec<u8> = (0..16).flat_map(|y| xs.clone().map(move |x| (x, y))).map(|(x, y)| bytes[y * 16 + x]).collect();
            let lut = reference_lut(&values, 2.0);
            assert!(lut.windows(2).all(|w| w[0] <= w[1]), "tile {tile} mapping not monotone");
            // Columns outside the two tile centres (3.5 and 11.5) are mapped
            // by a single tile only.
            let pure_cols: Vec<usize> = if tile == 0 { (0..4).collect() } else { (12..16).collect() };
            for y in 0..16 {
                for &x in &pure_cols {
                    let v = bytes[y * 16 + x] as usize;
                    assert!((out.get(x, y) - lut[v]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn output_is_monotone_in_input_within_a_tile() {
        let img = GrayImage::from_fn(8, 8, |x, y| ((x * 8 + y) * 4) as f64);
        let out = clahe(&img, 2.0, (1, 1)).unwrap();
        let mut pairs: Vec<(f64, f64)> = img.data().iter().copied().zip(out.data().iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn tile_bounds_cover_axis() {
        assert_eq!(clahe_tile_bounds(10, 3), vec![(0, 3), (3, 6), (6, 10)]);
    }
}
