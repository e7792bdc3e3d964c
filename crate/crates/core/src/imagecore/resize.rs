use super::GrayImage;

/// Upscales so the shorter side is at least `min_side`, preserving aspect
/// ratio. Images already meeting the threshold are returned unchanged.
pub fn resize_min_side(img: &GrayImage, min_side: usize) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let short = w.min(h);
    if short >= min_side || min_side == 0 {
        return img.clone();
    }
    let scale = min_side as f64 / short as f64;
    let nw = ((w as f64 * scale).round() as usize).max(1);
    let nh = ((h as f64 * scale).round() as usize).max(1);
    resize_bilinear(img, nw, nh)
}

/// Bilinear resampling with pixel-centre alignment.
pub(crate) fn resize_bilinear(img: &GrayImage, nw: usize, nh: usize) -> GrayImage {
    let sx = img.width() as f64 / nw as f64;
    let sy = img.height() as f64 / nh as f64;
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    GrayImage::from_fn(nw, nh, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(img.width() - 1), (y0 + 1).min(img.height() - 1));
        let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
        let top = img.get(x0, y0) * (1.0 - ax) + img.get(x1, y0) * ax;
        let bottom = img.get(x0, y1) * (1.0 - ax) + img.get(x1, y1) * ax;
        top * (1.0 - ay) + bottom * ay
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meets_threshold_unchanged() {
        let img = GrayImage::filled(120, 100, 3.0);
        assert_eq!(resize_min_side(&img, 100), img);
    }

    #[test]
    fn doubles_short_side() {
        let img = GrayImage::from_fn(50, 80, |x, y| (x + y) as f64);
        let out = resize_min_side(&img, 100);
        assert_eq!((out.width(), out.height()), (100, 160));
    }

    #[test]
    fn constant_stays_constant() {
        let img = GrayImage::filled(7, 3, 99.0);
        let out = resize_min_side(&img, 10);
        assert!(out.data().iter().all(|&v| (v - 99.0).abs() < 1e-12));
    }

    #[test]
    fn aspect_ratio_within_a_pixel() {
        for (w, h, m) in [(33, 17, 40), (5, 9, 13), (640, 480, 1000)] {
            let img = GrayImage::filled(w, h, 0.0);
            let out = resize_min_side(&img, m);
            assert_eq!(out.width().min(out.height()), m);
            let expected = w.max(h) as f64 * m as f64 / w.min(h) as f64;
            assert!((out.width().max(out.height()) as f64 - expected).abs() <= 1.0);
        }
    }
}
