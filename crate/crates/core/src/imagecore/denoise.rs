use super::{GrayImage, ImageError};

/// Non-local means parameters: filter strength `h`, template patch size and
/// search window size (both odd, in pixels).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NlMeansParams {
    pub strength: f64,
    pub template: usize,
    pub search: usize,
}

impl Default for NlMeansParams {
    fn default() -> Self {
        Self { strength: 10.0, template: 7, search: 21 }
    }
}

/// Non-local means denoising.
///
/// Every pixel becomes a weighted average of the pixels in its search window,
/// weighted by `exp(-d² / h²)` where `d²` is the mean squared difference of
/// the two template patches. Patch distances for one displacement are
/// computed for the whole image at once with a summed-area table, so the cost
/// is `O(pixels · search²)` rather than `O(pixels · search² · template²)`.
pub fn nl_means_denoise(img: &GrayImage, params: NlMeansParams) -> Result<GrayImage, ImageError> {
    let NlMeansParams { strength, template, search } = params;
    if template % 2 == 0 || search % 2 == 0 || template > search {
        return Err(ImageError::InvalidParameter(format!(
            "template {template} and search {search} must be odd with template <= search"
        )));
    }
    if !(strength > 0.0) {
        return Err(ImageError::InvalidParameter(format!("strength {strength} must be positive")));
    }
    let (w, h) = (img.width(), img.height());
    let rt = template / 2;
    let rs = search / 2;
    let pad = rt + rs;
    let pw = w + 2 * pad;
    let ph = h + 2 * pad;
    let padded: Vec<f64> = (0..ph)
        .flat_map(|y| (0..pw).map(move |x| (x, y)))
        .map(|(x, y)| img.get_clamped(x as isize - pad as isize, y as isize - pad as isize))
        .collect();

    // Region over which squared differences are needed: every template window
    // of every image pixel.
    let rw = w + 2 * rt;
    let rh = h + 2 * rt;
    let origin = pad - rt;
    let area = (template * template) as f64;
    let inv_h2 = 1.0 / (strength * strength);

    let mut num = vec![0.0; w * h];
    let mut den = vec![0.0; w * h];
    let mut integral = vec![0.0; (rw + 1) * (rh + 1)];

    for dy in -(rs as isize)..=rs as isize {
        for dx in -(rs as isize)..=rs as isize {
            for y in 0..rh {
                let mut row_sum = 0.0;
                let py = origin + y;
                let qy = (py as isize + dy) as usize;
                for x in 0..rw {
                    let px = origin + x;
                    let qx = (px as isize + dx) as usize;
                    let d = padded[py * pw + px] - padded[qy * pw + qx];
                    row_sum += d * d;
                    integral[(y + 1) * (rw + 1) + x + 1] = integral[y * (rw + 1) + x + 1] + row_sum;
                }
            }
            for y in 0..h {
                for x in 0..w {
                    let (x0, y0, x1, y1) = (x, y, x + template, y + template);
                    let ssd = integral[y1 * (rw + 1) + x1] - integral[y0 * (rw + 1) + x1]
                        - integral[y1 * (rw + 1) + x0]
                        + integral[y0 * (rw + 1) + x0];
                    let dist = (ssd / area).max(0.0);
                    let weight = (-dist * inv_h2).exp();
                    let qx = (x + pad) as isize + dx;
                    let qy = (y + pad) as isize + dy;
                    num[y * w + x] += weight * padded[qy as usize * pw + qx as usize];
                    den[y * w + x] += weight;
                }
            }
        }
    }
    let data = num.iter().zip(&den).map(|(n, d)| n / d).collect();
    Ok(GrayImage::from_raw_clamped(w, h, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::mse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Direct O(n·search²·template²) evaluation of the same weights.
    fn brute_force(img: &GrayImage, p: NlMeansParams) -> GrayImage {
        let rt = (p.template / 2) as isize;
        let rs = (p.search / 2) as isize;
        GrayImage::from_fn(img.width(), img.height(), |x, y| {
            let (x, y) = (x as isize, y as isize);
            let (mut num, mut den) = (0.0, 0.0);
            for sy in -rs..=rs {
                for sx in -rs..=rs {
                    let mut ssd = 0.0;
                    for ty in -rt..=rt {
                        for tx in -rt..=rt {
                            let a = img.get_clamped(x + tx, y + ty);
                            let b = img.get_clamped(x + sx + tx, y + sy + ty);
                            ssd += (a - b) * (a - b);
                        }
                    }
                    let wgt = (-(ssd / (p.template * p.template) as f64) / (p.strength * p.strength)).exp();
                    num += wgt * img.get_clamped(x + sx, y + sy);
                    den += wgt;
                }
            }
            num / den
        })
    }

    #[test]
    fn uniform_is_unchanged() {
        let img = GrayImage::filled(12, 9, 131.0);
        let out = nl_means_denoise(&img, NlMeansParams::default()).unwrap();
        for v in out.data() {
            assert!((v - 131.0).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_brute_force() {
        let img = GrayImage::from_fn(11, 9, |x, y| ((x * 47 + y * 23) % 256) as f64);
        let p = NlMeansParams { strength: 30.0, template: 3, search: 5 };
        let fast = nl_means_denoise(&img, p).unwrap();
        let slow = brute_force(&img, p);
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn reduces_gaussian_noise_on_text_like_image() {
        let clean = GrayImage::from_fn(48, 32, |x, y| {
            let stroke = (x % 12 < 3 && (4..28).contains(&y)) || (y % 10 < 2 && (6..42).contains(&x));
            if stroke { 20.0 } else { 235.0 }
        });
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 15.0).unwrap();
        let noisy = GrayImage::from_fn(48, 32, |x, y| clean.get(x, y) + noise.sample(&mut rng));
        let denoised = nl_means_denoise(&noisy, NlMeansParams::default()).unwrap();
        let before = mse(&clean, &noisy).unwrap();
        let after = mse(&clean, &denoised).unwrap();
        assert!(after < before, "mse before {before}, after {after}");
    }

    #[test]
    fn rejects_bad_windows() {
        let img = GrayImage::filled(4, 4, 1.0);
        let bad = NlMeansParams { strength: 10.0, template: 9, search: 7 };
        assert!(nl_means_denoise(&img, bad).is_err());
        let even = NlMeansParams { strength: 10.0, template: 4, search: 7 };
        assert!(nl_means_denoise(&img, even).is_err());
    }
}
