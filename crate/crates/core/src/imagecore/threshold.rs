use super::{convolve, gaussian_kernel, GrayImage, ImageError};

/// Gaussian sigma used for a given block size when none is supplied; the
/// same rule common adaptive-threshold implementations use.
fn block_sigma(block: usize) -> f64 {
    0.3 * ((block as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Binarizes against a Gaussian-weighted local mean: a pixel becomes 255
/// (background) when it is brighter than `mean - c`, 0 (ink) otherwise.
pub fn adaptive_gaussian_threshold(img: &GrayImage, block: usize, c: f64) -> Result<GrayImage, ImageError> {
    if block < 3 || block % 2 == 0 {
        return Err(ImageError::InvalidParameter(format!("threshold block {block} must be odd and >= 3")));
    }
    let kernel = gaussian_kernel(block, block_sigma(block))?;
    let means = convolve(img, &kernel);
    let data = img
        .data()
        .iter()
        .zip(means)
        .map(|(&v, m)| if v > m - c { 255.0 } else { 0.0 })
        .collect();
    Ok(GrayImage::from_raw_clamped(img.width(), img.height(), data))
}
