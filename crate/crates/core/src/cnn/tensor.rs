use crate::imagecore::{GrayImage, MAX_INTENSITY};

use super::CnnError;

/// A single `channels × height × width` activation map.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl TensorMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width, values: vec![0.0; channels * height * width] }
    }

    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self, CnnError> {
        if values.len() != channels * height * width {
            return Err(CnnError::ShapeMismatch(format!(
                "{} values for a {channels}x{height}x{width} map",
                values.len()
            )));
        }
        Ok(Self { channels, height, width, values })
    }

    /// One-channel map on the `[0, 1]` activation scale.
    pub fn from_image(img: &GrayImage) -> Self {
        Self {
            channels: 1,
            height: img.height(),
            width: img.width(),
            values: img.data().iter().map(|v| v / MAX_INTENSITY).collect(),
        }
    }

    /// Back to the 0–255 scale; only valid for one-channel maps.
    pub fn to_image(&self) -> Result<GrayImage, CnnError> {
        if self.channels != 1 {
            return Err(CnnError::ShapeMismatch(format!("cannot view {} channels as an image", self.channels)));
        }
        Ok(GrayImage::from_raw_clamped(
            self.width,
            self.height,
            self.values.iter().map(|v| v * MAX_INTENSITY).collect(),
        ))
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    /// Rectangular crop of every channel.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> TensorMap {
        let mut values = Vec::with_capacity(self.channels * w * h);
        for c in 0..self.channels {
            let plane = &self.values[c * self.height * self.width..(c + 1) * self.height * self.width];
            for y in y0..y0 + h {
                values.extend_from_slice(&plane[y * self.width + x0..y * self.width + x0 + w]);
            }
        }
        TensorMap { channels: self.channels, height: h, width: w, values }
    }
}

/// A stack of equally shaped maps, laid out `[sample][channel][row][col]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub samples: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl Batch {
    pub fn zeros(samples: usize, channels: usize, height: usize, width: usize) -> Self {
        Self { samples, channels, height, width, values: vec![0.0; samples * channels * height * width] }
    }

    pub fn stack(maps: &[&TensorMap]) -> Result<Self, CnnError> {
        let first = maps.first().ok_or_else(|| CnnError::ShapeMismatch("empty batch".into()))?;
        let shape = first.shape();
        let mut values = Vec::with_capacity(maps.len() * first.values.len());
        for m in maps {
            if m.shape() != shape {
                return Err(CnnError::ShapeMismatch(format!("{:?} vs {:?} in one batch", m.shape(), shape)));
            }
            values.extend_from_slice(&m.values);
        }
        Ok(Self { samples: maps.len(), channels: shape.0, height: shape.1, width: shape.2, values })
    }

    pub fn single(map: &TensorMap) -> Self {
        Self { samples: 1, channels: map.channels, height: map.height, width: map.width, values: map.values.clone() }
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn sample_len(&self) -> usize {
        self.channels * self.plane()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values[i * self.sample_len()..(i + 1) * self.sample_len()]
    }

    pub fn to_map(&self, i: usize) -> TensorMap {
        TensorMap { channels: self.channels, height: self.height, width: self.width, values: self.sample(i).to_vec() }
    }

    pub fn same_shape(&self, other: &Batch) -> bool {
        self.samples == other.samples
            && self.channels == other.channels
            && self.height == other.height
            && self.width == other.width
    }
}
