use serde::{Deserialize, Serialize};

use super::{GrayImage, ImageError, MAX_INTENSITY};

/// PSNR in decibels, or `NotApplicable` when the two images are identical
/// (MSE of zero would give an infinite value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "db", rename_all = "snake_case")]
pub enum PsnrValue {
    Finite(f64),
    NotApplicable,
}

impl PsnrValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            PsnrValue::Finite(db) => Some(db),
            PsnrValue::NotApplicable => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, PsnrValue::Finite(_))
    }
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64, ImageError> {
    a.check_same_dims(b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

pub fn psnr(reference: &GrayImage, test: &GrayImage) -> Result<PsnrValue, ImageError> {
    let mse = mse(reference, test)?;
    if mse == 0.0 {
        return Ok(PsnrValue::NotApplicable);
    }
    Ok(PsnrValue::Finite(10.0 * (MAX_INTENSITY * MAX_INTENSITY / mse).log10()))
}
