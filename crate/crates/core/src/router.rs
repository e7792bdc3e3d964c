//! Laplacian-variance quality tiers and the enhancement plan each tier gets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{laplacian_variance, GrayImage};

pub const DEFAULT_HIGH_THRESHOLD: f64 = 500.0;
pub const DEFAULT_LOW_THRESHOLD: f64 = 150.0;

#[derive(Debug, Error, PartialEq)]
pub enum RouterError {
    #[error("Laplacian variance must be a non-negative number, got {0}")]
    InvalidVariance(f64),
    #[error("thresholds must satisfy high > low >= 0, got high={high} low={low}")]
    InvalidThresholds { high: f64, low: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum QualityTier {
    High,
    Medium,
    Low,
}

impl QualityTier {
    pub const ALL: [QualityTier; 3] = [QualityTier::High, QualityTier::Medium, QualityTier::Low];

    pub fn as_str(self) -> &'static str {
        match self {
            QualityTier::High => "HIGH",
            QualityTier::Medium => "MEDIUM",
            QualityTier::Low => "LOW",
        }
    }
}

impl std::fmt::Display for QualityTier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnhancementPlan {
    pub cnn_passes: u8,
    pub apply_sharpen: bool,
    pub apply_clahe_post: bool,
}

impl EnhancementPlan {
    pub const BYPASS: EnhancementPlan = EnhancementPlan { cnn_passes: 0, apply_sharpen: false, apply_clahe_post: false };

    pub fn is_bypass(&self) -> bool {
        self.cnn_passes == 0
    }
}

/// Tier boundaries: HIGH when `B > high`, MEDIUM when `low < B <= high`,
/// LOW when `B <= low`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub high: f64,
    pub low: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { high: DEFAULT_HIGH_THRESHOLD, low: DEFAULT_LOW_THRESHOLD }
    }
}

impl Thresholds {
    pub fn new(high: f64, low: f64) -> Result<Self, RouterError> {
        if !(high > low && low >= 0.0) {
            return Err(RouterError::InvalidThresholds { high, low });
        }
        Ok(Self { high, low })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityAssessment {
    pub variance: f64,
    pub tier: QualityTier,
    pub plan: EnhancementPlan,
}

pub fn classify_tier(variance: f64) -> Result<QualityTier, RouterError> {
    classify_tier_with(variance, Thresholds::default())
}

pub fn classify_tier_with(variance: f64, thresholds: Thresholds) -> Result<QualityTier, RouterError> {
    if !(variance >= 0.0) || variance.is_infinite() {
        return Err(RouterError::InvalidVariance(variance));
    }
    Ok(if variance > thresholds.high {
        QualityTier::High
    } else if variance > thresholds.low {
        QualityTier::Medium
    } else {
        QualityTier::Low
    })
}

pub fn plan_enhancement(tier: QualityTier) -> EnhancementPlan {
    match tier {
        QualityTier::High => EnhancementPlan::BYPASS,
        QualityTier::Medium => EnhancementPlan { cnn_passes: 1, apply_sharpen: false, apply_clahe_post: true },
        QualityTier::Low => EnhancementPlan { cnn_passes: 1, apply_sharpen: true, apply_clahe_post: true },
    }
}

pub fn assess(img: &GrayImage, thresholds: Thresholds) -> QualityAssessment {
    let variance = laplacian_variance(img);
    // laplacian_variance is finite and non-negative for any valid image
    let tier = classify_tier_with(variance, thresholds).unwrap_or(QualityTier::Low);
    QualityAssessment { variance, tier, plan: plan_enhancement(tier) }
}
