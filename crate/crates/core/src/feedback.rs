//! Confidence-driven retry loop. When the engine's mean confidence falls
//! below the threshold the page is re-run with one more sharpening pass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{sharpen, GrayImage};
use crate::ocr::{OcrEngine, OcrError, OcrResult, Page};

#[derive(Debug, Error)]
pub enum FeedbackError {
    #[error("invalid feedback config: {0}")]
    InvalidConfig(String),
    #[error("attempt {attempt}: {source}")]
    Engine {
        attempt: u32,
        #[source]
        source: OcrError,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackConfig {
    /// Percent.
    pub threshold: f64,
    pub max_attempts: u32,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self { threshold: 70.0, max_attempts: 3 }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<(), FeedbackError> {
        if !(0.0..=100.0).contains(&self.threshold) {
            return Err(FeedbackError::InvalidConfig(format!("threshold {} outside [0, 100]", self.threshold)));
        }
        if self.max_attempts == 0 {
            return Err(FeedbackError::InvalidConfig("max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub attempt_number: u32,
    pub sharpen_passes: u32,
    pub mean_confidence: f64,
    pub token_count: usize,
    pub elapsed: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub attempts: Vec<Attempt>,
    /// 1-based number of the attempt whose result was kept.
    pub chosen: u32,
}

impl AttemptLog {
    pub fn retries(&self) -> usize {
        self.attempts.len().saturating_sub(1)
    }

    pub fn engine_elapsed(&self) -> f64 {
        self.attempts.iter().map(|a| a.elapsed).sum()
    }
}

/// `attempt - 1` sharpen passes applied to `img`; attempt 1 is the image
/// itself.
pub fn progressive_sharpen(img: &GrayImage, attempt: u32) -> GrayImage {
    (1..attempt).fold(img.clone(), |acc, _| sharpen(&acc))
}

/// Runs `engine` on `img`, retrying with cumulative sharpening until the
/// mean confidence reaches the threshold or the attempt budget runs out.
/// Returns the highest-confidence attempt (earliest on ties).
pub fn run_with_retries(
    engine: &dyn OcrEngine,
    img: &GrayImage,
    transcript: Option<&str>,
    cfg: &FeedbackConfig,
) -> Result<(OcrResult, AttemptLog), FeedbackError> {
    cfg.validate()?;
    let mut log = AttemptLog::default();
    let mut best: Option<OcrResult> = None;
    let mut current = img.clone();
    for attempt in 1..=cfg.max_attempts {
        if attempt > 1 {
            current = sharpen(&current);
        }
        let page = Page { image: &current, transcript };
        let result = engine.recognize(&page).map_err(|source| FeedbackError::Engine { attempt, source })?;
        log.attempts.push(Attempt {
            attempt_number: attempt,
            sharpen_passes: attempt - 1,
            mean_confidence: result.mean_confidence,
            token_count: result.tokens.len(),
            elapsed: result.elapsed,
        });
        let reached = result.mean_confidence >= cfg.threshold;
        if best.as_ref().is_none_or(|b| result.mean_confidence > b.mean_confidence) {
            log.chosen = attempt;
            best = Some(result);
        }
        if reached {
            break;
        }
    }
    Ok((best.expect("at least one attempt runs"), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::Clock;
    use crate::ocr::{MockEngine, MockProfile, ScriptedEngine};

    fn page_image() -> GrayImage {
        GrayImage::from_fn(24, 16, |x, y| 60.0 + ((x * 7 + y * 13) % 11) as f64 * 12.0)
    }

    fn run(script: &[f64]) -> (OcrResult, AttemptLog, ScriptedEngine) {
        let engine = ScriptedEngine::new("s", script.to_vec());
        let (r, log) = run_with_retries(&engine, &page_image(), None, &FeedbackConfig::default()).unwrap();
        (r, log, engine)
    }

    #[test]
    fn confident_first_attempt_stops() {
        let (r, log, engine) = run(&[80.0]);
        assert_eq!(engine.calls(), 1);
        assert_eq!(log.chosen, 1);
        assert_eq!(r.mean_confidence, 80.0);
    }

    #[test]
    fn second_attempt_crosses_threshold() {
        let (r, log, engine) = run(&[65.0, 75.0]);
        assert_eq!(engine.calls(), 2);
        assert_eq!(log.chosen, 2);
        assert_eq!(r.tokens[0].text, "ATTEMPT2");
    }

    #[test]
    fn best_attempt_kept_when_threshold_never_reached() {
        let (r, log, engine) = run(&[60.0, 62.0, 61.0]);
        assert_eq!(engine.calls(), 3);
        assert_eq!(log.chosen, 2);
        assert_eq!(r.mean_confidence, 62.0);
        let passes: Vec<u32> = log.attempts.iter().map(|a| a.sharpen_passes).collect();
        assert_eq!(passes, vec![0, 1, 2]);
    }

    #[test]
    fn ties_keep_earliest() {
        let (_, log, _) = run(&[50.0, 50.0, 50.0]);
        assert_eq!(log.chosen, 1);
    }

    #[test]
    fn engine_sees_cumulative_sharpening() {
        let img = page_image();
        let (_, _, engine) = run(&[10.0]);
        let expected: Vec<u64> = vec![img.content_hash(), sharpen(&img).content_hash(), sharpen(&sharpen(&img)).content_hash()];
        assert_eq!(engine.seen(), expected);
    }

    #[test]
    fn progressive_sharpen_composes() {
        let img = page_image();
        assert_eq!(progressive_sharpen(&img, 1), img);
        assert_eq!(progressive_sharpen(&img, 2), sharpen(&img));
        assert_eq!(progressive_sharpen(&img, 3), sharpen(&sharpen(&img)));
        let flat = GrayImage::filled(9, 9, 77.0);
        for k in 1..=4 {
            assert_eq!(progressive_sharpen(&flat, k), flat);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let engine = ScriptedEngine::new("s", vec![1.0]);
        let bad = FeedbackConfig { threshold: 120.0, max_attempts: 3 };
        assert!(run_with_retries(&engine, &page_image(), None, &bad).is_err());
        let bad = FeedbackConfig { threshold: 70.0, max_attempts: 0 };
        assert!(run_with_retries(&engine, &page_image(), None, &bad).is_err());
        assert_eq!(engine.calls(), 0);
    }

    #[test]
    fn monotone_profile_gives_nondecreasing_confidence() {
        let engine = MockEngine::new("m", MockProfile::default(), Clock::Frozen);
        let blurry = crate::imagecore::gaussian_blur(&page_image(), 5, 2.0).unwrap();
        let cfg = FeedbackConfig { threshold: 100.0, max_attempts: 3 };
        let (r, log) = run_with_retries(&engine, &blurry, None, &cfg).unwrap();
        let confs: Vec<f64> = log.attempts.iter().map(|a| a.mean_confidence).collect();
        assert!(confs.windows(2).all(|w| w[1] >= w[0]), "{confs:?}");
        assert_eq!(r.mean_confidence, confs.iter().cloned().fold(f64::MIN, f64::max));
    }
}
