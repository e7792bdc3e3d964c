use super::{GrayImage, ImageError};

/// Square, odd-sized convolution kernel, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

/// 4-neighbour Laplacian.
pub const LAPLACIAN_KERNEL: [f64; 9] = [0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0];

pub const SHARPEN_KERNEL: [f64; 9] = [0.0, -1.0, 0.0, -1.0, 5.0, -1.0, 0.0, -1.0, 0.0];

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self, ImageError> {
        if size % 2 == 0 {
            return Err(ImageError::InvalidParameter(format!("kernel size {size} must be odd")));
        }
        if weights.len() != size * size {
            return Err(ImageError::InvalidParameter(format!(
                "kernel of size {size} needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        Ok(Self { size, weights })
    }

    pub fn from_3x3(weights: [f64; 9]) -> Self {
        Self { size: 3, weights: weights.to_vec() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Correlates `img` with `kernel` using replicate borders. The result is not
/// clamped; callers decide how to bring it back into range.
///
/// Accumulation order is fixed (kernel rows top to bottom, columns left to
/// right, starting from zero) so results are reproducible bit for bit.
pub fn convolve(img: &GrayImage, kernel: &Kernel) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let k = kernel.size;
    let r = (k / 2) as isize;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for ky in 0..k as isize {
                let row = &kernel.weights[ky as usize * k..(ky as usize + 1) * k];
                for (kx, &wt) in row.iter().enumerate() {
                    acc += wt * img.get_clamped(x + kx as isize - r, y + ky - r);
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Normalized `size`×`size` Gaussian kernel, built as the outer product of a
/// normalized 1-D Gaussian.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Kernel, ImageError> {
    if size % 2 == 0 {
        return Err(ImageError::InvalidParameter(format!("kernel size {size} must be odd")));
    }
    if !(sigma > 0.0) {
        return Err(ImageError::InvalidParameter(format!("sigma {sigma} must be positive")));
    }
    let r = (size / 2) as f64;
    let mut g: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - r;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = g.iter().sum();
    for v in &mut g {
        *v /= s;
    }
    let mut weights = Vec::with_capacity(size * size);
    for gy in &g {
        for gx in &g {
            weights.push(gy * gx);
        }
    }
    Kernel::new(size, weights)
}

pub fn gaussian_blur(img: &GrayImage, kernel_size: usize, sigma: f64) -> Result<GrayImage, ImageError> {
    let kernel = gaussian_kernel(kernel_size, sigma)?;
    Ok(GrayImage::from_raw_clamped(img.width(), img.height(), convolve(img, &kernel)))
}

/// One pass of the 5-centre sharpening kernel, clamped to `[0, 255]`.
pub fn sharpen(img: &GrayImage) -> GrayImage {
    let kernel = Kernel::from_3x3(SHARPEN_KERNEL);
    GrayImage::from_raw_clamped(img.width(), img.height(), convolve(img, &kernel))
}

pub fn laplacian_response(img: &GrayImage) -> Vec<f64> {
    convolve(img, &Kernel::from_3x3(LAPLACIAN_KERNEL))
}

/// Population variance of the 4-neighbour Laplacian response: the blur score
/// the quality router thresholds on.
pub fn laplacian_variance(img: &GrayImage) -> f64 {
    let response = laplacian_response(img);
    let n = response.len() as f64;
    let mean = response.iter().sum::<f64>() / n;
    response.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n
}
