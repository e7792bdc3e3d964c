//! Grayscale raster type and the classical image operators used by the
//! pipeline and the baselines.
//!
//! Intensities live on a 0–255 scale as `f64` everywhere. Quantization to
//! 8 bits only happens at file I/O (see [`io`]).

mod clahe;
mod convolve;
mod denoise;
pub mod io;
mod psnr;
mod resize;
mod threshold;

pub use clahe::{clahe, clahe_tile_bounds};
pub use convolve::{
    convolve, gaussian_blur, gaussian_kernel, laplacian_response, laplacian_variance, sharpen,
    Kernel, LAPLACIAN_KERNEL, SHARPEN_KERNEL,
};
pub use denoise::{nl_means_denoise, NlMeansParams};
pub use psnr::{mse, psnr, PsnrValue};
pub use resize::resize_min_side;
pub use threshold::adaptive_gaussian_threshold;

use thiserror::Error;

pub const MAX_INTENSITY: f64 = 255.0;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("data length {len} does not match {width}x{height}")]
    LengthMismatch { width: usize, height: usize, len: usize },
    #[error("intensity {value} at index {index} is outside [0, 255]")]
    IntensityOutOfRange { index: usize, value: f64 },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported or corrupt image file: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major grayscale raster with intensities in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Validating constructor.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage { width, height });
        }
        if data.len() != width * height {
            return Err(ImageError::LengthMismatch { width, height, len: data.len() });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=MAX_INTENSITY).contains(*v))
        {
            return Err(ImageError::IntensityOutOfRange { index, value });
        }
        Ok(Self { width, height, data })
    }

    /// Constant image. Panics on a zero dimension.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        Self { width, height, data: vec![clamp_intensity(value); width * height] }
    }

    /// Builds an image from a per-pixel function `f(x, y)`; values are clamped
    /// into `[0, 255]`. Panics on a zero dimension.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(clamp_intensity(f(x, y)));
            }
        }
        Self { width, height, data }
    }

    /// Internal constructor for operator outputs; clamps every value.
    pub(crate) fn from_raw_clamped(width: usize, height: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        for v in &mut data {
            *v = clamp_intensity(*v);
        }
        Self { width, height, data }
    }

    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self, ImageError> {
        Self::new(width, height, bytes.iter().map(|&b| f64::from(b)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with replicate border handling.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn same_dims(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_dims(&self, other: &GrayImage) -> Result<(), ImageError> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(ImageError::DimensionMismatch(self.width, self.height, other.width, other.height))
        }
    }

    /// 8-bit quantization: round half-up, then clamp.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    /// FNV-1a hash over the dimensions and the quantized raster.
    pub fn content_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut hash = OFFSET;
        let dims = [(self.width as u64).to_le_bytes(), (self.height as u64).to_le_bytes()];
        for byte in dims.iter().flatten().copied().chain(self.to_bytes()) {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(PRIME);
        }
        hash
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

#[inline]
pub(crate) fn clamp_intensity(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, MAX_INTENSITY)
    }
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    (clamp_intensity(v) + 0.5).floor().min(MAX_INTENSITY) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(GrayImage::new(0, 3, vec![]), Err(ImageError::EmptyImage { .. })));
        assert!(matches!(
            GrayImage::new(2, 2, vec![0.0; 3]),
            Err(ImageError::LengthMismatch { .. })
        ));
        assert!(matches!(
            GrayImage::new(1, 2, vec![0.0, 256.0]),
            Err(ImageError::IntensityOutOfRange { index: 1, .. })
        ));
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn quantization_rounds_half_up() {
        let img = GrayImage::new(4, 1, vec![0.49, 0.5, 254.5, 255.0]).unwrap();
        assert_eq!(img.to_bytes(), vec![0, 1, 255, 255]);
    }

    #[test]
    fn replicate_lookup() {
        let img = GrayImage::from_fn(3, 2, |x, y| (x + 10 * y) as f64);
        assert_eq!(img.get_clamped(-5, 0), 0.0);
        assert_eq!(img.get_clamped(7, 9), 12.0);
    }

    #[test]
    fn hash_distinguishes_shape() {
        let a = GrayImage::filled(2, 3, 10.0);
        let b = GrayImage::filled(3, 2, 10.0);
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash(), a.clone().content_hash());
    }
}
